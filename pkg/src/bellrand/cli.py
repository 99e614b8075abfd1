"""Command-line front end: ``bellrand <command> [options]``.

Exit codes: 0 success, 2 invalid input or I/O error, 3 infeasible SDP,
4 solver failure. Every JSON output embeds the configuration that produced
it under ``"config"``; ``--config FILE`` replays such a configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .npa import chained_coefficients
from .quantum import (
    PORTS,
    SagnacCircuit,
    assemblage_of,
    induced_povm,
    port_amplitudes,
    sagnac_unitary,
    singlet_with_visibility,
    trine_povm,
    trine_states,
)
from .randomness import (
    Certificate,
    GuessingProblem,
    RandomnessResult,
    Settings,
    certified_bits_with_error,
    di_guessing_probability,
    optimize_settings,
    simulated_behavior,
)
from .scenario import Behavior, cg_label, check_no_signaling, regularize, to_collins_gisin
from .sdp import SolverError
from .statistics import CountTable, frequencies, sample_counts
from .steering import (
    SteeringProblem,
    conditional_states,
    regularized_assemblage,
    steering_bits_with_error,
    steering_guessing_probability,
)

log = logging.getLogger("bellrand")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 2, 3, 4


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    visibility: float = 0.997
    settings: str = "chained"
    settings_file: str | None = None
    povm: bool = True
    target_input: int | None = None  # 1-based; default: POVM input if present, else 1
    mode: str = "di"
    counts: int | None = None
    seed: int = 0
    level: int = 2
    data: str | None = None
    states: str | None = None
    certificate: str | None = None
    out: str | None = None
    budget: int = 40
    restarts: int = 3
    theta: list = field(default_factory=lambda: list(_trine_angles()))

    def validate(self) -> None:
        if not 0.0 <= self.visibility <= 1.0:
            raise InputError("--visibility must lie in [0, 1]")
        if self.level not in (1, 2):
            raise InputError("--level must be 1 or 2")
        if self.settings not in ("chained", "file", "optimize"):
            raise InputError("--settings must be chained, file or optimize")
        if self.settings == "file" and not self.settings_file:
            raise InputError("--settings file needs --settings-file PATH")
        if self.mode not in ("di", "steering", "both"):
            raise InputError("--mode must be di, steering or both")
        if self.counts is not None and self.counts < 1:
            raise InputError("--counts must be a positive integer")
        if self.target_input is not None and self.target_input < 1:
            raise InputError("--target-input is 1-based")


def _trine_angles() -> tuple[float, float, float]:
    c = SagnacCircuit.trine_settings()
    return (c.theta1, c.theta2, c.theta3)


# --- helpers ---------------------------------------------------------------


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write(cfg: RunConfig, payload: dict) -> None:
    doc = _jsonable({**payload, "config": asdict(cfg), "version": __version__})
    text = json.dumps(doc, indent=2)
    if cfg.out:
        try:
            Path(cfg.out).write_text(text + "\n")
        except OSError as exc:
            raise InputError(f"cannot write {cfg.out}: {exc.strerror}") from None
        print(f"wrote {cfg.out}")
    else:
        print(text)


def _settings(cfg: RunConfig) -> Settings:
    if cfg.settings == "file":
        d = _read_json(cfg.settings_file)
        try:
            return Settings.from_dict(d.get("settings", d))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"invalid settings file: {exc}") from None
    if cfg.settings == "optimize":
        res = optimize_settings(
            max(cfg.visibility, 1e-6), 3, cfg.povm, _target(cfg, None), cfg.level, cfg.restarts, cfg.budget, seed=cfg.seed
        )
        return res.settings
    return Settings.chained(3, cfg.povm)


def _target(cfg: RunConfig, alice_outcomes: tuple[int, ...] | None) -> int:
    """0-based target input; by default the first input with more than two outcomes, else input 1."""
    if cfg.target_input is not None:
        t = cfg.target_input - 1
    elif alice_outcomes is None:
        t = 3 if cfg.povm else 0
    else:
        t = next((x for x, k in enumerate(alice_outcomes) if k > 2), 0)
    if alice_outcomes is not None and t >= len(alice_outcomes):
        raise InputError(f"--target-input {t + 1} exceeds the {len(alice_outcomes)} Alice inputs")
    return t


def _chained_value(b: Behavior) -> dict | None:
    s = b.scenario
    n = min(s.n_inputs)
    proj = [x for x in range(n) if s.alice_outcomes[x] == 2]
    if n < 2 or len(proj) < n or any(k != 2 for k in s.bob_outcomes[:n]):
        return None
    c = chained_coefficients(n)
    value = float(np.sum(c * b.table[:n, :n, :2, :2]))
    return {"value": value, "local_bound": 2 * n - 2, "quantum_max": 2 * n * np.cos(np.pi / (2 * n))}


def _load_data(cfg: RunConfig):
    """Return ``(behavior to certify, FrequencyStats or None, model behavior or None)``.

    The model behavior is the exact simulated table when counts are sampled
    from it; certificates are then computed on the model and evaluated on
    the sampled frequencies.
    """
    if cfg.data:
        path = Path(cfg.data)
        if path.suffix.lower() == ".csv":
            try:
                counts = CountTable.load(path)
            except OSError as exc:
                raise InputError(f"cannot read {path}: {exc.strerror}") from None
            fs = frequencies(counts)
            return regularize(fs.freq), fs, None
        d = _read_json(cfg.data)
        try:
            b = Behavior.from_dict(d.get("behavior", d), neg_tol=np.inf)
        except (KeyError, TypeError) as exc:
            raise InputError(f"invalid behavior file: {exc}") from None
        return b, None, None
    b = simulated_behavior(cfg.visibility, _settings(cfg))
    if cfg.counts:
        fs = frequencies(sample_counts(b, cfg.counts, cfg.seed))
        return regularize(fs.freq), fs, b
    return b, None, None


def _solver_exit(exc: SolverError) -> int:
    return EXIT_INFEASIBLE if exc.solution.status == "infeasible" else EXIT_SOLVER


# --- commands --------------------------------------------------------------


def cmd_simulate(cfg: RunConfig) -> dict:
    settings = _settings(cfg)
    b = simulated_behavior(cfg.visibility, settings)
    out = {
        "behavior": b.to_dict(),
        "settings": settings.to_dict(),
        "no_signaling": check_no_signaling(b, 1e-12).to_dict(),
        "chained_bell": _chained_value(b),
    }
    if cfg.counts:
        counts = sample_counts(b, cfg.counts, cfg.seed)
        csv_path = Path(cfg.out).with_suffix(".csv") if cfg.out else None
        if csv_path:
            try:
                counts.save(csv_path)
            except OSError as exc:
                raise InputError(f"cannot write {csv_path}: {exc.strerror}") from None
            out["counts_file"] = str(csv_path)
        else:
            out["counts_csv"] = counts.to_csv()
        out["seed"] = cfg.seed
    return out


def cmd_regularize(cfg: RunConfig) -> dict:
    b, fs, _ = _load_data(cfg)
    raw = fs.freq.as_behavior() if fs is not None else b
    reg = regularize(raw)
    return {
        "behavior": reg.to_dict(),
        "raw_no_signaling": check_no_signaling(raw, 1e-12).to_dict(),
        "no_signaling": check_no_signaling(reg, 1e-12).to_dict(),
        "negativity": None if reg.negativity is None else reg.negativity.to_dict(),
        "cg": {cg_label(k): float(v) for k, v in zip(reg.scenario.cg_keys(), to_collins_gisin(reg).values)},
        "sigma": None if fs is None else np.asarray(fs.sigma).tolist(),
    }


def _certify_di(cfg: RunConfig) -> dict:
    b, fs, model = _load_data(cfg)
    x_star = _target(cfg, b.scenario.alice_outcomes)
    out: dict = {}
    if cfg.certificate:
        d = _read_json(cfg.certificate)
        try:
            cert = Certificate.from_dict(d.get("certificate", d))
        except (KeyError, TypeError) as exc:
            raise InputError(f"invalid certificate file: {exc}") from None
        if cert.scenario != b.scenario:
            raise InputError("certificate scenario does not match the data")
        if cfg.target_input is None:
            x_star = cert.target_input
        elif x_star != cert.target_input:
            raise InputError("--target-input differs from the certificate's target input")
        res = certified_bits_with_error(cert, fs) if fs is not None else RandomnessResult(cert(to_collins_gisin(b)), cert)
        out["certificate_source"] = cfg.certificate
    else:
        source = model if model is not None else b
        if not check_no_signaling(source, 1e-9).passed:
            source = regularize(source)
        res = di_guessing_probability(GuessingProblem.from_behavior(source, x_star, cfg.level))
        out["certificate_source"] = "model behavior" if model is not None else "input behavior"
        if model is not None:
            out["asymptotic"] = {"p_guess": res.p_guess, "bits": res.bits}
        if fs is not None:
            solver = res.solver
            res = certified_bits_with_error(res.certificate, fs)
            res.solver = solver
    out.update(res.to_dict())
    out["target_input"] = x_star + 1
    out["no_signaling"] = check_no_signaling(b, 1e-9).to_dict()
    out["negativity"] = None if b.negativity is None else b.negativity.to_dict()
    out["chained_bell"] = _chained_value(b)
    return out


def _certify_steering(cfg: RunConfig) -> dict:
    if cfg.data:
        raise InputError("certify-steering works from simulated or count data with --states; pass --counts")
    settings = _settings(cfg)
    alice, _ = settings.measurements()
    x_star = _target(cfg, tuple(len(m) for m in alice))
    exact = assemblage_of(singlet_with_visibility(cfg.visibility), alice)
    states = conditional_states(exact)
    if cfg.states:
        d = _read_json(cfg.states)
        try:
            states = [[np.array([complex(re, im) for re, im in m]).reshape(2, 2) for m in row] for row in d["states"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"invalid states file: {exc}") from None
    model = simulated_behavior(cfg.visibility, settings)
    fs = frequencies(sample_counts(model, cfg.counts, cfg.seed)) if cfg.counts else None
    asm = regularized_assemblage(fs.freq if fs is not None else model, states)
    residual = asm.signaling_residual()
    problem = SteeringProblem.from_assemblage(asm, x_star)  # refuses residuals above 1e-3
    out: dict = {}
    if fs is not None and not cfg.states:
        res = steering_guessing_probability(SteeringProblem.from_assemblage(exact, x_star))
        out["certificate_source"] = "model assemblage"
        out["asymptotic"] = {"p_guess": res.p_guess, "bits": res.bits}
    else:
        res = steering_guessing_probability(problem)
        out["certificate_source"] = "input assemblage"
    if fs is not None:
        solver = res.solver
        res = steering_bits_with_error(res.certificate, fs, states)
        res.solver = solver
    out.update(res.to_dict())
    out["target_input"] = x_star + 1
    out["assemblage_signaling_residual"] = residual
    return out


def cmd_certify_di(cfg: RunConfig) -> dict:
    return _certify_di(cfg)


def cmd_certify_steering(cfg: RunConfig) -> dict:
    return _certify_steering(cfg)


def cmd_verify_povm(cfg: RunConfig) -> dict:
    t1, t2, t3 = cfg.theta
    U = sagnac_unitary(SagnacCircuit(t1, t2, t3))
    povm = induced_povm(U)
    target = trine_povm()
    dev = max(float(np.max(np.abs(e - t))) for e, t in zip(povm.effects, target.effects))
    completeness = float(np.max(np.abs(sum(povm.effects) - np.eye(2))))
    expected = {"mode1": np.sqrt(2 / 3), "mode0_H": np.sqrt(1 / 6), "mode0_V": np.sqrt(1 / 6)}
    amps, amp_dev = [], 0.0
    for i, psi in enumerate(trine_states()):
        a = port_amplitudes(U, psi)
        amps.append(a)
        # psi_i concentrates sqrt(2/3) on outcome port i
        names = list(PORTS)
        order = [names[i]] + [n for n in names if n != names[i]]
        want = [expected["mode1"], expected["mode0_H"], expected["mode0_V"]]
        amp_dev = max(amp_dev, max(abs(a[n] - w) for n, w in zip(order, want)))
    ranks = [int(np.linalg.matrix_rank(e, tol=1e-10)) for e in povm.effects]
    trivial = [bool(np.allclose(e, e[0, 0] * np.eye(2), atol=1e-10)) for e in povm.effects]
    informative = sum(1 for r, triv in zip(ranks, trivial) if r > 0 and not triv)
    return {
        "angles": [t1, t2, t3],
        "effects": povm.to_dict()["effects"],
        "max_deviation_from_trine": dev,
        "completeness_error": completeness,
        "port_amplitudes": amps,
        "max_amplitude_deviation": amp_dev,
        "effect_ranks": ranks,
        "effect_is_multiple_of_identity": trivial,
        "informative_outcomes": informative,
        "degenerate": informative < 3,
    }


def cmd_optimize(cfg: RunConfig) -> dict:
    if not 0 < cfg.visibility <= 1:
        raise InputError("optimize needs a visibility in (0, 1]")
    res = optimize_settings(
        cfg.visibility, 3, cfg.povm, _target(cfg, None), cfg.level, cfg.restarts, cfg.budget, seed=cfg.seed
    )
    return {
        "settings": res.settings.to_dict(),
        "result": res.result.to_dict(),
        "default_bits": res.default_bits,
        "evaluations": res.evaluations,
    }


def cmd_report(cfg: RunConfig) -> dict:
    out: dict = {}
    t0 = time.perf_counter()
    if cfg.mode in ("di", "both"):
        out["di"] = _certify_di(cfg)
    if cfg.mode in ("steering", "both"):
        out["steering"] = _certify_steering(cfg)
    if "di" in out and "steering" in out:
        out["steering_minus_di_bits"] = out["steering"]["bits"] - out["di"]["bits"]
    out["elapsed_s"] = time.perf_counter() - t0
    return out


COMMANDS = {
    "simulate": cmd_simulate,
    "regularize": cmd_regularize,
    "certify-di": cmd_certify_di,
    "certify-steering": cmd_certify_steering,
    "verify-povm": cmd_verify_povm,
    "optimize": cmd_optimize,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="replay the config embedded in a previous JSON output")
    common.add_argument("--visibility", type=float)
    common.add_argument("--settings", choices=["chained", "file", "optimize"])
    common.add_argument("--settings-file")
    common.add_argument("--projective-only", action="store_true", help="drop the trine POVM input")
    common.add_argument("--target-input", type=int, help="1-based Alice input to certify")
    common.add_argument("--mode", choices=["di", "steering", "both"])
    common.add_argument("--counts", type=int, help="simulate N counts per setting")
    common.add_argument("--seed", type=int)
    common.add_argument("--level", type=int, choices=[1, 2])
    common.add_argument("--out")
    common.add_argument("--budget", type=int, help="optimizer SDP budget")
    common.add_argument("--restarts", type=int)
    common.add_argument("--states", help="JSON with conditional states for steering")
    common.add_argument("--certificate", help="evaluate the certificate in this JSON instead of solving")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="bellrand", description="Certified randomness from Bell and steering data.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name in ("regularize", "certify-di", "report"):
            sp.add_argument("data", nargs="?", help="behavior JSON or count CSV (x,y,a,b,count)")
        if name == "verify-povm":
            sp.add_argument("--theta", type=float, nargs=3, metavar=("T1", "T2", "T3"))
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config:
        base = _read_json(args.config).get("config", {})
        if not isinstance(base, dict):
            raise InputError("--config file has no config object")
        # a replay never overwrites the output it came from
        base.pop("out", None)
    base["command"] = args.command
    over = {
        "visibility": args.visibility,
        "settings": args.settings,
        "settings_file": args.settings_file,
        "target_input": args.target_input,
        "mode": args.mode,
        "counts": args.counts,
        "seed": args.seed,
        "level": args.level,
        "budget": args.budget,
        "restarts": args.restarts,
        "states": args.states,
        "certificate": args.certificate,
        "out": args.out,
        "data": getattr(args, "data", None),
        "theta": getattr(args, "theta", None),
    }
    base.update({k: v for k, v in over.items() if v is not None})
    if args.projective_only:
        base["povm"] = False
    try:
        cfg = RunConfig(**base)
    except TypeError as exc:
        raise InputError(f"invalid config: {exc}") from None
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        payload = COMMANDS[cfg.command](cfg)
        _write(cfg, payload)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _solver_exit(exc)
    except ValueError as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
