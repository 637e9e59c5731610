"""Command-line interface for construction, training, sweeps, and self-checks."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import harness
from .bp import DecoderWeights, decode
from .channel import ebn0_to_sigma2, gen_channel, apply_channel
from .config import load_config
from .crc import CrcSpec, crc_parity_matrix
from .equalizer import default_delay
from .harness import StopRule, emit_results, run_blind_eq_experiment, run_decoder_sweep
from .polar import PolarCode, bpsk_modulate, construct_code, encode, frozen_parity_matrix, place_message
from .training import (EqTrainConfig, TrainConfig, gen_blocks, train_decoder,
                       train_equalizer_blind)


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help="master RNG seed", default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, help="worker threads for sweeps",
                        default=argparse.SUPPRESS)
    common.add_argument("--out", help="output directory", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="polarsim", parents=[common],
                                description="Polar-code BP simulation and "
                                            "syndrome-loss training toolbox")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("construct", parents=[common],
                   help="build the code and write its descriptor")

    td = sub.add_parser("train-decoder", parents=[common],
                        help="train decoder scaling weights")
    td.add_argument("--loss", choices=["bce", "frozen_synd", "crc_synd"], default=None)
    td.add_argument("--epochs", type=int, default=None)

    te = sub.add_parser("train-equalizer", parents=[common],
                        help="train the blind equalizer on one channel")
    te.add_argument("--loss", choices=["frozen_synd", "crc_synd", "bce"], default=None)
    te.add_argument("--snr-db", type=float, default=6.0)
    te.add_argument("--blocks", type=int, default=100, help="received blocks M")
    te.add_argument("--weights", default=None, help="decoder weights JSON")

    sd = sub.add_parser("sweep-decoder", parents=[common],
                        help="Monte Carlo BER/BLER vs SNR")
    sd.add_argument("--weights", default=None, help="decoder weights JSON")
    sd.add_argument("--label", default="bp")

    se = sub.add_parser("sweep-equalizer", parents=[common],
                        help="blind-equalization experiment")
    se.add_argument("--weights", default=None, help="decoder weights JSON")

    sub.add_parser("gradcheck", parents=[common],
                   help="finite-difference gradient verification")
    sub.add_parser("selftest", parents=[common], help="fast algebraic self-checks")
    return p


def _code_from(cfg) -> PolarCode:
    c = cfg["code"]
    return construct_code(c["N"], c["K"], c["C"], c["design_snr_db"])


def _crc_from(cfg, code) -> CrcSpec | None:
    if code.C == 0:
        return None
    spec = CrcSpec.from_string(cfg["crc"]["poly"])
    if spec.C != code.C:
        raise ValueError(f"polynomial degree {spec.C} != code CRC length {code.C}")
    return spec


def _channel_from(cfg):
    ch = cfg["channel"]
    if ch["L"] != len(ch["d"]):
        raise ValueError(f"channel block: L={ch['L']} but {len(ch['d'])} distances")
    return ch


def _weights_from(path) -> DecoderWeights | None:
    return DecoderWeights.load(path) if path else None


def cmd_construct(args, cfg):
    code = _code_from(cfg)
    path = os.path.join(args.out, "code.json")
    code.save(path)
    print(f"constructed ({code.N},{code.K},{code.C}) design {code.design_snr_db} dB")
    print(f"info set: {code.info_set.tolist()}")
    print(f"wrote {path}")
    return 0


def cmd_train_decoder(args, cfg):
    code = _code_from(cfg)
    crc_spec = _crc_from(cfg, code)
    t = dict(cfg["training"])
    if args.loss:
        t["loss_kind"] = args.loss
    if args.epochs:
        t["epochs"] = args.epochs
    tc = TrainConfig(loss_kind=t["loss_kind"], eta=t["eta"], batch=t["batch"],
                     epochs=t["epochs"], validation_ratio=t["validation_ratio"],
                     patience=t["patience"], seed=args.seed,
                     iters=cfg["decoder"]["iters"],
                     codewords_per_snr=t["codewords_per_snr"],
                     snr_lo=t["snr_lo"], snr_hi=t["snr_hi"],
                     snr_points=t["snr_points"],
                     weights_mode=cfg["decoder"]["weights_mode"],
                     microbatch=t["microbatch"])
    weights, report = train_decoder(code, crc_spec, tc)
    wpath = os.path.join(args.out, f"weights_{tc.loss_kind}.json")
    weights.save(wpath, iters=tc.iters)
    rpath = os.path.join(args.out, f"train_report_{tc.loss_kind}.json")
    with open(rpath, "w") as fh:
        json.dump({"config": report.config,
                   "epochs": [{"val_loss": l, "val_bler": b}
                              for l, b in zip(report.val_loss, report.val_bler)],
                   "best_epoch": report.best_epoch,
                   "wall_clock": report.wall_clock,
                   "weights_file": wpath}, fh, indent=2)
        fh.write("\n")
    print(f"trained {tc.loss_kind}: best epoch {report.best_epoch}, "
          f"final val_bler {report.val_bler[-1]:.4g}")
    print(f"wrote {wpath} and {rpath}")
    return 0


def cmd_train_equalizer(args, cfg):
    code = _code_from(cfg)
    crc_spec = _crc_from(cfg, code)
    weights = _weights_from(args.weights)
    eq = cfg["equalizer"]
    ch = _channel_from(cfg)
    rng = np.random.default_rng(args.seed if ch["seed"] is None else ch["seed"])
    taps = gen_channel(ch["d"], ch["gamma"], ch["sigma_h2"], rng)
    sigma2 = ebn0_to_sigma2(args.snr_db, code.rate)
    loss = args.loss or cfg["training"]["loss_kind"]
    llr_unused, u, _ = gen_blocks(code, crc_spec, args.blocks, args.snr_db,
                                  args.snr_db, rng)
    x = bpsk_modulate(encode(code, u))
    y = apply_channel(x, taps, sigma2, rng)
    delay = default_delay(eq["F"], len(ch["d"]))
    eq_cfg = EqTrainConfig(loss_kind=loss, eta=eq["eta_blind"],
                           epochs=eq["blind_epochs"], iters=cfg["decoder"]["iters"])
    f, report = train_equalizer_blind(code, weights, y, sigma2, eq["F"], delay,
                                      eq_cfg, crc_spec=crc_spec,
                                      u_true=u if loss == "bce" else None)
    path = os.path.join(args.out, f"equalizer_{loss}.json")
    with open(path, "w") as fh:
        json.dump({"coeffs": [float(v) for v in f], "delay": delay,
                   "loss_kind": loss, "snr_db": args.snr_db,
                   "channel_taps": [float(v) for v in taps],
                   "loss_trace": report.val_loss}, fh, indent=2)
        fh.write("\n")
    print(f"blind equalizer ({loss}) loss {report.val_loss[0]:.4g} -> "
          f"{min(report.val_loss):.4g} in {len(report.val_loss)} epochs")
    print(f"wrote {path}")
    return 0


def cmd_sweep_decoder(args, cfg):
    code = _code_from(cfg)
    crc_spec = _crc_from(cfg, code)
    weights = _weights_from(args.weights)
    sw = cfg["sweep"]
    stop = StopRule(sw["min_block_errors"], sw["max_blocks"])
    res = run_decoder_sweep(code, weights, sw["snr_list"], stop, crc_spec,
                            iters=cfg["decoder"]["iters"], seed=args.seed,
                            chunk=sw["chunk"], threads=args.threads,
                            method=args.label)
    paths = emit_results(res, os.path.join(args.out, "decoder_sweep.csv"))
    for p in res.points:
        print(f"  {p.snr_db:5.2f} dB  ber {p.ber:.3e}  bler {p.bler:.3e}  "
              f"({p.block_errors} block errors / {p.blocks} blocks)")
    print("wrote " + ", ".join(paths))
    return 0


def cmd_sweep_equalizer(args, cfg):
    code = _code_from(cfg)
    crc_spec = _crc_from(cfg, code)
    weights = _weights_from(args.weights)
    sw = cfg["sweep"]
    eq = cfg["equalizer"]
    ch = _channel_from(cfg)
    exp_cfg = harness.EqExperimentConfig(
        distances=tuple(ch["d"]), gamma=ch["gamma"], sigma_h2=ch["sigma_h2"],
        num_taps=eq["F"], iters=cfg["decoder"]["iters"], eta_lms=eq["eta_lms"],
        eta_cma=eq["eta_cma"], eta_blind=eq["eta_blind"],
        lms_passes=eq["lms_passes"], cma_passes=eq["cma_passes"],
        olr_passes=eq["olr_passes"], blind_epochs=eq["blind_epochs"],
        meas_blocks=sw["meas_blocks"])
    results = run_blind_eq_experiment(sw["scenario"], sw["n_channels"],
                                      sw["adapt_blocks"], sw["methods"],
                                      sw["snr_list"], code, weights, crc_spec,
                                      exp_cfg, seed=args.seed)
    paths = emit_results(results, os.path.join(args.out, "equalizer_sweep.csv"))
    for m, res in results.items():
        line = "  ".join(f"{p.snr_db:.0f}dB:{p.bler:.2e}" for p in res.points)
        print(f"{m:16s} bler {line}")
    print("wrote " + ", ".join(paths[:2]) + f" (+{len(paths) - 2} curve files)")
    return 0


def cmd_gradcheck(args, cfg):
    from . import autodiff as ad
    from . import diffbp

    code = construct_code(16, 8, 0, 2.0)
    h_froz = frozen_parity_matrix(code)
    rng = np.random.default_rng(args.seed)
    llr, _, _ = gen_blocks(code, None, 8, 2.0, 2.0, rng)
    iters = cfg["decoder"]["iters"]

    def fn(theta):
        th = theta.reshape(2, code.n, code.N)
        tape = ad.Tape()
        a, b = tape.param(th[0]), tape.param(th[1])
        froz, _, _ = diffbp.decode_on_tape(tape, llr, code, a, b, iters=iters)
        loss = diffbp.frozen_loss_graph(froz, h_froz)
        g = tape.backward(loss)
        return float(loss.data), np.concatenate([g[a].ravel(), g[b].ravel()])

    theta0 = rng.uniform(0.8, 1.2, 2 * code.n * code.N)
    idx = rng.choice(theta0.size, 100, replace=False)
    rep = ad.grad_check(fn, theta0, step=1e-4, indices=idx)
    print(f"probed 100 coordinates: max rel err (non-kink) {rep.max_rel_err:.3e}, "
          f"kink fraction {rep.kink_fraction:.2%}")
    ok = rep.max_rel_err <= 1e-3 and rep.kink_fraction <= 0.05
    print("gradcheck " + ("PASS" if ok else "FAIL"))
    return 0 if ok else 1


def cmd_selftest(args, cfg):
    rng = np.random.default_rng(args.seed)
    failures = []

    def check(name, ok):
        print(f"  {'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)

    code = _code_from(cfg)
    g = code.gen_matrix.astype(np.int64)
    check("generator self-inverse", bool(((g @ g) % 2 == np.eye(code.N)).all()))
    payload = rng.integers(0, 2, (200, code.K + code.C)).astype(np.uint8)
    u = place_message(code, payload)
    c = encode(code, u)
    check("encode involution", bool(((c.astype(np.int64) @ g.T) % 2 == u).all()))
    h = frozen_parity_matrix(code)
    check("frozen syndrome null", not ((c.astype(np.int64) @ h.T.astype(np.int64)) % 2).any())
    crc_spec = _crc_from(cfg, code)
    if crc_spec is not None:
        m = rng.integers(0, 2, code.K).astype(np.uint8)
        from .crc import crc_check, crc_encode
        word = crc_encode(m, crc_spec)
        hcrc = crc_parity_matrix(code.K, crc_spec)
        check("crc round-trip", crc_check(word, crc_spec))
        check("crc parity matrix", not ((hcrc.astype(np.int64) @ word.astype(np.int64)) % 2).any())
    llr, u_t, _ = gen_blocks(code, crc_spec, 50, 8.0, 8.0, rng)
    u_hat, _ = decode(llr, code, None, iters=cfg["decoder"]["iters"])
    check("high-SNR decode", bool((u_hat == u_t).mean() > 0.99))
    print("selftest " + ("PASS" if not failures else f"FAIL ({len(failures)})"))
    return 0 if not failures else 1


_GLOBAL_DEFAULTS = {"config": None, "seed": 0, "threads": 1, "out": "."}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    for key, val in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, val)
    try:
        cfg = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        handler = {
            "construct": cmd_construct,
            "train-decoder": cmd_train_decoder,
            "train-equalizer": cmd_train_equalizer,
            "sweep-decoder": cmd_sweep_decoder,
            "sweep-equalizer": cmd_sweep_equalizer,
            "gradcheck": cmd_gradcheck,
            "selftest": cmd_selftest,
        }[args.command]
        return handler(args, cfg)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
