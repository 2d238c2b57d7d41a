import io
import json
import math

import numpy as np
import pytest
from scipy import stats

from hapconv.decode import decode
from hapconv.model import ChannelParams, GapDistribution, Haplotype, ModelError
from hapconv.reads import (
    ObservationTable,
    ReadRecord,
    SimConfig,
    SimConfigError,
    aggregate,
    read_reads_csv,
    simulate_counts,
    simulate_reads,
    two_level_weights,
    write_reads_csv,
)

NOISELESS = ChannelParams(0.0)


def random_truth(n, seed):
    return Haplotype(np.random.default_rng(seed).integers(0, 2, size=n))


class TestSimConfig:
    def test_rejects(self):
        with pytest.raises(SimConfigError):
            SimConfig(n=1, channel=NOISELESS, coverage_c=1.0)
        with pytest.raises(SimConfigError):
            SimConfig(n=10, channel=NOISELESS, coverage_c=-1.0)
        with pytest.raises(SimConfigError):
            SimConfig(n=10, channel=NOISELESS, coverage_c=1.0, mode="bogus")

    def test_weights_need_adjacent_gaps(self):
        with pytest.raises(SimConfigError, match="adjacent"):
            SimConfig(n=5, channel=NOISELESS, coverage_c=1.0, gaps=GapDistribution.uniform(2), weights=np.ones(4))

    @pytest.mark.parametrize("q", [np.ones(3), np.array([2.0, 2, 0, 0]), np.array([1.0, 1, 1, 1.5])])
    def test_weight_validation(self, q):
        with pytest.raises(SimConfigError):
            SimConfig(n=5, channel=NOISELESS, coverage_c=1.0, weights=q)

    def test_two_level(self):
        q = two_level_weights(101, 0.5, 0.5)
        assert q[:50].tolist() == [0.5] * 50
        assert q.sum() == pytest.approx(100)
        with pytest.raises(SimConfigError):
            two_level_weights(101, 0.5, 3.0)
        with pytest.raises(SimConfigError):
            two_level_weights(101, 1.0, 0.5)


class TestSimulateCounts:
    def test_zero_coverage_is_empty(self):
        cfg = SimConfig(n=50, channel=ChannelParams(0.1), coverage_c=0.0)
        assert simulate_counts(random_truth(50, 0), cfg).is_empty()

    @pytest.mark.parametrize("gaps", [GapDistribution.adjacent(), GapDistribution.uniform(3)])
    def test_noiseless_cells_agree_with_truth(self, gaps):
        truth = random_truth(200, 1)
        cfg = SimConfig(n=200, channel=NOISELESS, coverage_c=4.0, gaps=gaps, seed=3)
        table = simulate_counts(truth, cfg)
        s = truth.snps
        assert table.spans == gaps.support
        for span, (zeros, ones) in table.counts.items():
            parity = s[: 200 - span] ^ s[span:]
            assert not ones[parity == 0].any()
            assert not zeros[parity == 1].any()

    def test_mean_total(self):
        n, c = 1000, 5.0
        cfg = dict(n=n, channel=ChannelParams(0.05), coverage_c=c, gaps=GapDistribution.uniform(2))
        truth = random_truth(n, 2)
        totals = np.array([simulate_counts(truth, SimConfig(seed=k, **cfg)).total() for k in range(200)])
        # per-cell rate c p_l ln n over n - l cells of each span
        expected = c * math.log(n) * (0.5 * (n - 1) + 0.5 * (n - 2))
        se = math.sqrt(expected / 200)
        assert abs(totals.mean() - expected) < 3 * se

    def test_flip_rate(self):
        n = 2000
        truth = random_truth(n, 4)
        table = simulate_counts(truth, SimConfig(n=n, channel=ChannelParams(0.1), coverage_c=8.0, seed=5))
        zeros, ones = table.counts[1]
        parity = truth.snps[:-1] ^ truth.snps[1:]
        wrong = np.where(parity == 1, zeros, ones).sum()
        total = table.total()
        assert total > 100_000
        assert abs(wrong / total - 0.18) < 3 * math.sqrt(0.18 * 0.82 / total)

    def test_weighted_with_unit_weights_matches_unweighted(self):
        n = 300
        truth = random_truth(n, 6)
        base = dict(n=n, channel=ChannelParams(0.1), coverage_c=3.0, seed=11)
        assert simulate_counts(truth, SimConfig(**base)) == simulate_counts(
            truth, SimConfig(weights=np.ones(n - 1), **base)
        )

    def test_seed_determinism(self):
        truth = random_truth(100, 7)
        cfg = SimConfig(n=100, channel=ChannelParams(0.2), coverage_c=2.0, gaps=GapDistribution.uniform(3), seed=9)
        assert simulate_counts(truth, cfg) == simulate_counts(truth, cfg)
        other = SimConfig(n=100, channel=ChannelParams(0.2), coverage_c=2.0, gaps=GapDistribution.uniform(3), seed=10)
        assert simulate_counts(truth, cfg) != simulate_counts(truth, other)

    def test_size_mismatch(self):
        with pytest.raises(SimConfigError):
            simulate_counts(random_truth(10, 0), SimConfig(n=11, channel=NOISELESS, coverage_c=1.0))
        with pytest.raises(SimConfigError):
            simulate_counts(random_truth(10, 0), SimConfig(n=10, channel=NOISELESS, coverage_c=1.0, mode="read_list"))


class TestReads:
    def test_worked_example_ends(self):
        s = Haplotype("0011").snps
        read = ReadRecord(start=2, span=1, end1=int(s[1]), end2=int(s[2]), chromosome=1)
        assert (read.end1, read.end2) == (0, 1)
        other = ReadRecord(2, 1, 1 - int(s[1]), 1 - int(s[2]), 2)
        assert (other.end1, other.end2) == (1, 0)
        assert read.parity == other.parity == 1

    def test_simulated_ends_follow_chromosome(self):
        truth = random_truth(60, 8)
        reads = simulate_reads(truth, SimConfig(n=60, channel=NOISELESS, coverage_c=3.0, mode="read_list",
                                                gaps=GapDistribution.uniform(3), seed=1))
        assert reads
        s = truth.snps
        for r in reads:
            flip = r.chromosome - 1
            assert r.end1 == s[r.start - 1] ^ flip
            assert r.end2 == s[r.start + r.span - 1] ^ flip
            assert 1 <= r.start <= 60 - r.span
        assert {r.chromosome for r in reads} == {1, 2}

    def test_parity_flip_rate(self):
        n = 2000
        truth = random_truth(n, 9)
        reads = simulate_reads(truth, SimConfig(n=n, channel=ChannelParams(0.1), coverage_c=7.0,
                                                mode="read_list", seed=2))
        s = truth.snps
        wrong = sum(r.parity != (s[r.start - 1] ^ s[r.start]) for r in reads)
        assert len(reads) >= 100_000
        assert abs(wrong / len(reads) - 0.18) < 3 * math.sqrt(0.18 * 0.82 / len(reads))

    def test_aggregate_small(self):
        assert aggregate([], 5).is_empty()
        table = aggregate([ReadRecord(2, 1, 0, 1, 1), ReadRecord(2, 1, 0, 1, 2)], 4)
        assert table.cell(2, 1) == (0, 2)
        assert table.total() == 2

    def test_aggregate_rejects_out_of_range(self):
        with pytest.raises(ModelError):
            aggregate([ReadRecord(4, 1, 0, 0, 1)], 4)

    def test_aggregate_matches_counts_in_distribution(self):
        # per-cell count of aggregated reads vs the count mode, n = 50, W = 1
        n, c = 50, 2.0
        truth = Haplotype(np.zeros(n, dtype=np.uint8))
        via_reads, via_counts = [], []
        for k in range(200):
            reads = simulate_reads(truth, SimConfig(n=n, channel=NOISELESS, coverage_c=c, mode="read_list", seed=k))
            via_reads.append(aggregate(reads, n, spans=(1,)).counts[1][0])
            table = simulate_counts(truth, SimConfig(n=n, channel=NOISELESS, coverage_c=c, seed=k))
            via_counts.append(table.counts[1][0])
        a, b = np.concatenate(via_reads), np.concatenate(via_counts)
        assert abs(a.mean() - b.mean()) < 3 * math.sqrt(c * math.log(n) * 2 / a.size)
        # both are Poisson(c ln n) per cell
        assert stats.ks_2samp(a, b).pvalue > 1e-3

    def test_parity_sufficiency(self):
        # decoding from aggregated reads matches decoding from a table with the same counts
        n = 200
        truth = random_truth(n, 10)
        gaps = GapDistribution.uniform(2)
        reads = simulate_reads(truth, SimConfig(n=n, channel=ChannelParams(0.1), coverage_c=2.0, gaps=gaps,
                                                mode="read_list", seed=4))
        relabelled = [r._replace(chromosome=3 - r.chromosome, end1=1 - r.end1, end2=1 - r.end2) for r in reads]
        a = decode(aggregate(reads, n, (1, 2)), n, 2)
        b = decode(aggregate(relabelled, n, (1, 2)), n, 2)
        assert a == b

    def test_csv_round_trip(self):
        reads = [ReadRecord(1, 2, 0, 1, 1), ReadRecord(3, 1, 1, 1, 2)]
        buf = io.StringIO()
        write_reads_csv(reads, buf)
        assert buf.getvalue().splitlines()[0] == "start,span,end1,end2,chromosome"
        assert read_reads_csv(io.StringIO(buf.getvalue())) == reads
        with pytest.raises(ModelError):
            read_reads_csv(io.StringIO("a,b\n1,2\n"))

    def test_weighted_starts(self):
        n = 11
        q = np.zeros(n - 1) + 1e-9
        q[3] = (n - 1) - q.sum() + q[3]
        reads = simulate_reads(Haplotype(np.zeros(n, dtype=np.uint8)),
                               SimConfig(n=n, channel=NOISELESS, coverage_c=5.0, mode="read_list", weights=q, seed=0))
        assert {r.start for r in reads} == {4}


class TestObservationTable:
    def test_json_round_trip(self):
        table = ObservationTable.from_cells(6, [(1, 1, 2, 0), (3, 2, 0, 1), (4, 2, 1, 1)], spans=(1, 2, 3))
        doc = json.loads(json.dumps(table.to_json_dict()))
        assert ObservationTable.from_json_dict(doc) == table
        assert [s["span"] for s in doc["spans"]] == [1, 2, 3]
        assert doc["spans"][2]["cells"] == []

    def test_cells(self):
        table = ObservationTable.from_cells(4, [(2, 1, 1, 3), (2, 1, 1, 0)])
        assert table.cell(2, 1) == (2, 3)
        assert table.cell(1, 2) == (0, 0)
        assert list(table.iter_cells()) == [(2, 1, 2, 3)]
        assert table.max_span == 1

    @pytest.mark.parametrize("cells", [[(0, 1, 1, 0)], [(4, 1, 1, 0)], [(1, 4, 1, 0)]])
    def test_bad_cells(self, cells):
        with pytest.raises(ModelError):
            ObservationTable.from_cells(4, cells)

    def test_malformed_json(self):
        with pytest.raises(ModelError):
            ObservationTable.from_json_dict({"spans": []})
        with pytest.raises(ModelError):
            ObservationTable(3, {1: (np.zeros(2), -np.ones(2))})

    def test_immutable(self):
        table = ObservationTable.empty(4, (1,))
        with pytest.raises(ValueError):
            table.counts[1][0][0] = 5
