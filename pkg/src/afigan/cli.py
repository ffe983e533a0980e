"""Command-line runner: analyze-shape, verify-lemma, train, afi-bench.

Exit codes: 0 success, 1 configuration error, 2 runtime or divergence error.
"""
import argparse
import json
import os
import sys
import time

import numpy as np

from . import _kernels, afi, config, gantrain, linalg
from .datasets import generate_dataset
from .errors import ConfigError, InvalidParameterError, TrainingDivergence
from .randsrc import Rng

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class Runner:
    def __init__(self, cfg, out_dir, quiet=False):
        self.cfg = cfg
        self.out = out_dir
        self.quiet = quiet

    def say(self, msg):
        if not self.quiet:
            print(msg)

    def path(self, name):
        return os.path.join(self.out, name)

    def write_text(self, name, text):
        with open(self.path(name), "w", newline="\n") as fh:
            fh.write(text)


def cmd_analyze_shape(run):
    cfg = run.cfg
    data = generate_dataset(cfg.dataset)
    size = cfg.shape.sample_size or len(data)
    if size > len(data):
        raise ConfigError(f"sample_size {size} exceeds dataset size {len(data)}")
    if size < len(data):
        data = data[Rng(cfg.seed, gantrain.STREAM_EVAL).sample_indices(len(data), size)]
    spectrum = linalg.batch_spectrum(data)
    k = afi.effective_k(spectrum, size, cfg.shape.threshold_ratio)
    threshold = cfg.shape.threshold_ratio * spectrum.max
    above = int(np.count_nonzero(spectrum.eigenvalues > threshold)) if spectrum.max > 0 else 0
    lines = ["index,eigenvalue"]
    lines += [f"{i + 1},{float(v)!r}" for i, v in enumerate(spectrum.eigenvalues)]
    run.write_text("eigencurve.csv", "\n".join(lines) + "\n")
    report = {
        "shape": cfg.dataset.shape,
        "points": size,
        "threshold": threshold,
        "above_threshold": above,
        "effective_k": k,
        "p": afi.augmentation_probability(k, size),
        "negatives_clamped": spectrum.negatives_clamped,
    }
    run.write_text("shape_report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    run.say(f"{cfg.dataset.shape}: {above} eigenvalues above threshold, k = {k}")
    return report


def cmd_verify_lemma(run):
    cfg = run.cfg
    lc = cfg.lemma
    rows, slope = gantrain.lemma_sweep(lc.radii, lc.m, lc.hidden, lc.n, lc.k, cfg.seed, lc.antithetic)
    lines = ["radius,max_dev,error"] + [f"{r!r},{d!r},{e!r}" for r, d, e in rows]
    run.write_text("lemma.csv", "\n".join(lines) + "\n")
    report = {"slope": slope, "points": len(rows)}
    run.write_text("lemma_report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    run.say(f"log-log slope of error vs max deviation: {slope:.4f}")
    return report


def cmd_train(run):
    cfg = run.cfg
    if cfg.resume:
        state, tcfg = gantrain.load_training_checkpoint(cfg.resume)
        tcfg.iterations = cfg.train.iterations
        tcfg.trace_every = cfg.train.trace_every
    else:
        tcfg = cfg.train
        tcfg.seed = cfg.seed
        data = generate_dataset(cfg.dataset)
        if data.shape[1] != tcfg.m:
            raise ConfigError(f"dataset ambient_dim {data.shape[1]} != train.m {tcfg.m}")
        state = gantrain.init_state(tcfg, data)
    remaining = tcfg.iterations - state.iteration
    if remaining < 0:
        raise ConfigError(f"checkpoint is at iteration {state.iteration}, past {tcfg.iterations}")

    trace = open(run.path("trace.csv"), "w", newline="\n")
    trace.write(gantrain.trace_header(tcfg.b) + "\n")
    decisions = open(run.path("decisions.jsonl"), "w") if cfg.decision_trace else None
    written = []

    def on_step(st, res):
        if st.iteration % tcfg.trace_every:
            return
        rec = gantrain.TraceRecord(
            st.iteration, res.spectrum.eigenvalues, res.k, res.p, res.d_loss, res.g_loss,
            gantrain.generator_mmd(st.gen, st.data, tcfg) if tcfg.mmd_samples > 0 else None,
        )
        trace.write(rec.csv_row() + "\n")
        trace.flush()
        written.append(rec)
        if decisions is not None and res.real_decision is not None:
            entry = {"iteration": st.iteration, "real": res.real_decision.to_record()}
            if res.fake_decision is not None:
                entry["fake"] = res.fake_decision.to_record()
            decisions.write(json.dumps(entry, separators=(",", ":")) + "\n")
        run.say(f"iter {st.iteration}: d_loss {res.d_loss:.4f} g_loss {res.g_loss:.4f} k {res.k} p {res.p:.3f}")

    try:
        # tracing happens in on_step; train()'s own MMD tracing stays off
        quiet_cfg = gantrain.TrainConfig(**{**tcfg.to_dict(), "mmd_samples": 0})
        gantrain.train(quiet_cfg, state.data, state=state, iterations=remaining, on_step=on_step)
    except TrainingDivergence as exc:
        exc.last_record = written[-1] if written else None
        raise
    finally:
        trace.close()
        if decisions is not None:
            decisions.close()
    gantrain.save_training_checkpoint(state, tcfg, run.path("checkpoint"))
    run.say(f"finished at iteration {state.iteration}; checkpoint in {run.path('checkpoint')}")
    return {"iterations": state.iteration, "trace_rows": len(written)}


def bench_afi(batch_sizes, n, repeats, seed=0):
    """Mean wall time of ``afi_augment`` per batch size and backend."""
    rows = []
    for name in _kernels.available_backends():
        with _kernels.use_backend(name):
            for b in batch_sizes:
                feats = Rng(seed).normal((b, n))
                rng = Rng(seed + 1)
                afi.afi_augment(feats, afi.AfiConfig(), rng)
                start = time.perf_counter()
                for _ in range(repeats):
                    afi.afi_augment(feats, afi.AfiConfig(), rng)
                rows.append((name, b, (time.perf_counter() - start) / repeats * 1e6))
    return rows


def cmd_afi_bench(run):
    bc = run.cfg.bench
    rows = bench_afi(bc.batch_sizes, bc.n, bc.repeats, run.cfg.seed)
    lines = ["backend,batch_size,mean_us"] + [f"{n},{b},{t:.1f}" for n, b, t in rows]
    run.write_text("afi_bench.csv", "\n".join(lines) + "\n")
    for n, b, t in rows:
        run.say(f"{n:9s} b={b:3d}  {t:10.1f} us/call")
    return rows


COMMANDS = {
    "analyze-shape": cmd_analyze_shape,
    "verify-lemma": cmd_verify_lemma,
    "train": cmd_train,
    "afi-bench": cmd_afi_bench,
}


def build_parser():
    p = argparse.ArgumentParser(prog="afigan", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", help="unsigned integer seed (overrides the config)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--quiet", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config.load(args.config) if args.config else config.ExperimentConfig()
        if args.seed is not None:
            if not args.seed.isdigit() or int(args.seed) >= 1 << 64:
                raise ConfigError(f"--seed must be a decimal unsigned integer, got {args.seed!r}")
            cfg.seed = int(args.seed)
        os.makedirs(args.out, exist_ok=True)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    run = Runner(cfg, args.out, args.quiet)
    try:
        COMMANDS[args.command](run)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDivergence as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        if exc.last_record is not None:
            print(f"last finite trace row: {exc.last_record.csv_row()}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
