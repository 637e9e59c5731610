import math

import numpy as np
import pytest

from polarsim.bp import DecoderWeights
from polarsim.harness import (EqExperimentConfig, StopRule, SweepPoint,
                              SweepResult, emit_results, parse_results,
                              run_blind_eq_experiment, run_decoder_sweep,
                              wilson_interval)
from polarsim.polar import construct_code


class TestWilson:
    def test_no_trials(self):
        assert wilson_interval(0, 0) == (0.0, 1.0)

    def test_zero_errors_lower_bound_zero(self):
        lo, hi = wilson_interval(0, 100)
        assert lo == 0.0
        assert 0.0 < hi < 0.05

    def test_contains_point_estimate(self):
        lo, hi = wilson_interval(30, 200)
        assert lo < 30 / 200 < hi

    def test_shrinks_with_samples(self):
        lo1, hi1 = wilson_interval(10, 100)
        lo2, hi2 = wilson_interval(100, 1000)
        assert (hi2 - lo2) < (hi1 - lo1)


class TestDecoderSweep:
    def test_deterministic_at_fixed_thread_count(self, code_16_8):
        stop = StopRule(min_block_errors=30, max_blocks=3000)
        counts = []
        for threads in (1, 1, 2, 2):
            r = run_decoder_sweep(code_16_8, None, [2.0], stop, None,
                                  iters=3, seed=5, chunk=250, threads=threads)
            p = r.points[0]
            counts.append((threads, p.blocks, p.block_errors, p.bit_errors))
        assert counts[0] == counts[1]
        assert counts[2] == counts[3]

    def test_stop_rule_reaches_error_floor(self, code_16_8):
        stop = StopRule(min_block_errors=25, max_blocks=100_000)
        res = run_decoder_sweep(code_16_8, None, [0.0], stop, None,
                                iters=3, seed=1, chunk=200)
        p = res.points[0]
        assert p.block_errors >= 25
        assert not p.cap_hit

    def test_cap_recorded_at_high_snr(self, code_16_8):
        stop = StopRule(min_block_errors=1000, max_blocks=400)
        res = run_decoder_sweep(code_16_8, None, [12.0], stop, None,
                                iters=3, seed=1, chunk=200)
        p = res.points[0]
        assert p.blocks >= 400
        assert p.cap_hit

    def test_rate_one_code_is_clean_at_high_snr(self):
        code = construct_code(8, 8, 0, 2.0)
        stop = StopRule(min_block_errors=10, max_blocks=500)
        res = run_decoder_sweep(code, None, [14.0], stop, None, iters=2,
                                seed=2, chunk=100)
        assert res.points[0].bler == pytest.approx(0.0, abs=5e-3)

    def test_paired_seeds_identical_noise(self, code_16_8):
        stop = StopRule(min_block_errors=20, max_blocks=1500)
        a = run_decoder_sweep(code_16_8, None, [2.0], stop, None, iters=3,
                              seed=9, chunk=300, method="a")
        b = run_decoder_sweep(code_16_8, DecoderWeights.ones(code_16_8), [2.0],
                              stop, None, iters=3, seed=9, chunk=300, method="b")
        pa, pb = a.points[0], b.points[0]
        assert (pa.blocks, pa.block_errors) == (pb.blocks, pb.block_errors)


class TestEmit:
    def _result(self):
        p = SweepPoint(snr_db=2.0, bits=1000, blocks=100, bit_errors=17,
                       block_errors=9, mse_sum=12.5, mse_blocks=100)
        return SweepResult(method="bp", points=[p], meta={"seed": 4})

    def test_round_trip(self, tmp_path):
        res = self._result()
        path = tmp_path / "out.csv"
        emit_results(res, path)
        rows = parse_results(path)
        assert len(rows) == 1
        row = rows[0]
        assert row["method"] == "bp"
        assert row["snr_db"] == 2.0
        assert row["bits"] == 1000
        assert row["bit_errors"] == 17
        assert row["ber"] == res.points[0].ber
        assert row["bler"] == res.points[0].bler
        assert row["mse_mean"] == res.points[0].mse_mean
        assert row["seed"] == 4

    def test_empty_sweep_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        emit_results(SweepResult(method="bp", points=[], meta={}), path)
        text = path.read_text()
        assert text.splitlines() == [
            "method,snr_db,bits,blocks,bit_errors,block_errors,ber,bler,mse_mean,seed"]

    def test_deterministic_bytes(self, tmp_path):
        res = self._result()
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_results(res, p1)
        emit_results(res, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert (tmp_path / "a.csv.meta.json").exists()

    def test_gnuplot_curves_written(self, tmp_path):
        paths = emit_results(self._result(), tmp_path / "r.csv")
        dat = [p for p in paths if p.endswith(".dat")]
        assert len(dat) == 2
        for p in dat:
            snr, val = open(p).read().split()
            assert float(snr) == 2.0
            assert math.isfinite(float(val))

    def test_nan_mse_round_trips(self, tmp_path):
        p = SweepPoint(snr_db=1.0, bits=10, blocks=1, bit_errors=0, block_errors=0)
        path = tmp_path / "n.csv"
        emit_results(SweepResult(method="x", points=[p], meta={}), path)
        assert math.isnan(parse_results(path)[0]["mse_mean"])


@pytest.fixture(scope="module")
def tiny():
    code = construct_code(16, 8, 0, 2.0)
    cfg = EqExperimentConfig(num_taps=5, iters=3, blind_epochs=15,
                             lms_passes=2, cma_passes=1, olr_passes=1,
                             meas_blocks=40, meas_chunk=20)
    return run_blind_eq_experiment(
        "time_invariant", 2, 30,
        ["no_eq", "mmse_ts", "mmse_no_ts", "cma", "blind_synd_froz"],
        [4.0, 8.0], code, None, None, cfg, seed=3)


class TestBlindEqExperiment:
    def test_all_methods_reported(self, tiny):
        assert set(tiny) == {"no_eq", "mmse_ts", "mmse_no_ts", "cma",
                             "blind_synd_froz"}
        for res in tiny.values():
            assert [p.snr_db for p in res.points] == [4.0, 8.0]
            for p in res.points:
                assert p.blocks == 80  # 2 channels x 40 blocks
                assert p.mse_blocks == 80
                assert math.isfinite(p.mse_mean)

    def test_equalizers_beat_no_eq(self, tiny):
        # multipath ISI without equalization is essentially undecodable
        assert tiny["no_eq"].points[1].bler > 2 * tiny["mmse_ts"].points[1].bler

    def test_rejects_unknown_method(self, code_16_8):
        with pytest.raises(ValueError):
            run_blind_eq_experiment("time_invariant", 1, 4, ["bogus"], [4.0],
                                    code_16_8, None)

    def test_rejects_unknown_scenario(self, code_16_8):
        with pytest.raises(ValueError):
            run_blind_eq_experiment("fancy", 1, 4, ["no_eq"], [4.0],
                                    code_16_8, None)
