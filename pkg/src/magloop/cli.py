"""Command-line frontend.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import re
import sys
from pathlib import Path

import numpy as np

from magloop import io
from magloop.center import NotALoopError, loop_center
from magloop.engine import DEFAULT_STEPS, GEOMETRIES, evolve_affine
from magloop.floquet import (FAMILIES, LoopRefinementError, detect_loop, family_params,
                             loop_residuals, refine_loop, refine_separatrix, scan_map,
                             trace_separatrix)
from magloop.landau import (NotALoopSequence, kappa_closed_form, landau_center_commutator,
                            landau_sequence, parse_pulses, parse_word, verify_word_loop)
from magloop.packets import (GaussianPacket, SeparatrixError, drift_experiment,
                             inversion_demo, packet_history)
from magloop.profiles import (Biharmonic, Constant, PiecewiseConstant, ProfileDomainError,
                              ProfileSyntaxError, eval_number, format_profile, parse_profile)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

COMMON_DEFAULTS = {"geometry": "cylindrical", "steps_per_unit": DEFAULT_STEPS, "workers": 1}
COMMAND_DEFAULTS = {
    "scan": {"family": "biharmonic", "res": 512, "out": "scan.csv", "loop_lines": 0},
    "separatrix": {"family": "biharmonic", "branch": "both", "res": 128, "tol": 1e-9,
                   "out": "separatrix.csv"},
    "loop": {"nmax": 64, "tol": 1e-6, "window": 0.01, "refine": True, "out": "loops.csv"},
    "center": {"n": 1, "tol": 1e-6, "window": 0.01, "refine": True, "out": "center.csv"},
    "drift": {"force": "0,1", "blocks": 50, "n": 1, "tol": 1e-6, "out": "drift.csv"},
    "packet": {"force": "0,0", "times": "0:8:2", "mean": "0,0,1,0", "cov": "5,5,1,1,2",
               "doubles": 4, "out": "packet.csv"},
    "landau": {"out": "landau.csv"},
}


class ConfigError(ValueError):
    pass


# -- config -----------------------------------------------------------------

def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _number(v) -> float:
    return float(v) if isinstance(v, (int, float)) else eval_number(str(v))


_TYPES = {"steps_per_unit": int, "workers": int, "res": int, "nmax": int, "n": int,
          "blocks": int, "doubles": int, "loop_lines": int, "tol": float, "window": _number,
          "duration": _number, "block_period": _number, "t_end": _number, "t": None, "refine": _bool,
          "center": _bool, "inversion": _bool}


def resolve(args: argparse.Namespace) -> dict:
    """Flags override config keys, which override defaults."""
    cfg = dict(COMMON_DEFAULTS)
    cfg.update(COMMAND_DEFAULTS.get(args.command, {}))
    if args.config:
        cfg.update(read_config(args.config))
    cfg.update({k: v for k, v in vars(args).items() if v is not None and k != "config"})
    for key, typ in _TYPES.items():
        if key in cfg and cfg[key] is not None and typ is not None:
            try:
                cfg[key] = typ(cfg[key])
            except (TypeError, ValueError, ProfileSyntaxError) as exc:
                raise ConfigError(f"bad value for {key}: {cfg[key]!r}") from exc
    if "t" in cfg and cfg["t"] is not None and not isinstance(cfg["t"], float):
        cfg["t"] = eval_number(str(cfg["t"]))
    if cfg["geometry"] not in GEOMETRIES:
        raise ConfigError(f"geometry must be one of {GEOMETRIES}")
    if cfg["steps_per_unit"] < 1:
        raise ConfigError("steps-per-unit must be >= 1")
    if cfg["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    return cfg


def parse_range(text: str) -> tuple:
    """``a:b,c:d`` -> ((a, b), (c, d))."""
    try:
        axes = [tuple(eval_number(v) for v in part.split(":")) for part in text.split(",")]
    except ProfileSyntaxError as exc:
        raise ConfigError(str(exc)) from exc
    if len(axes) != 2 or any(len(a) != 2 or not a[0] < a[1] for a in axes):
        raise ConfigError(f"range must look like a:b,c:d with a < b, got {text!r}")
    return tuple(axes)


def parse_vector(text: str, n: int, name: str) -> np.ndarray:
    vals = [eval_number(v) for v in str(text).split(",")]
    if len(vals) != n:
        raise ConfigError(f"{name} needs {n} comma-separated values")
    return np.array(vals)


def parse_times(text: str) -> np.ndarray:
    """``start:stop:step`` (inclusive) or a comma list."""
    if ":" in text:
        a, b, s = (eval_number(v) for v in text.split(":"))
        if s <= 0 or b < a:
            raise ConfigError("times must be start:stop:step with step > 0")
        n = int(math.floor((b - a) / s + 1e-9)) + 1
        return a + s * np.arange(n)
    return np.array([eval_number(v) for v in text.split(",")])


def covariance(text: str) -> np.ndarray:
    """Either 5 numbers (sx2, sy2, sp2x, sp2y, cxp) or 16 row-major entries."""
    vals = [eval_number(v) for v in text.split(",")]
    if len(vals) == 16:
        return np.array(vals).reshape(4, 4)
    if len(vals) == 5:
        sx, sy, spx, spy, c = vals
        return np.array([[sx, 0, c, 0], [0, sy, 0, c], [c, 0, spx, 0], [0, c, 0, spy]])
    raise ConfigError("cov needs 5 (sx2,sy2,spx2,spy2,cxp) or 16 values")


def need_profile(cfg):
    if not cfg.get("profile"):
        raise ConfigError("--profile is required")
    return parse_profile(cfg["profile"])


def _say(msg: str) -> None:
    print(msg, flush=True)


# -- commands ---------------------------------------------------------------

def cmd_scan(cfg) -> int:
    family = cfg["family"]
    if family not in FAMILIES:
        raise ConfigError(f"family must be one of {FAMILIES}")
    ranges = parse_range(cfg["range"]) if cfg.get("range") else None
    smap = scan_map(family, ranges, cfg["res"], cfg["steps_per_unit"], cfg["workers"])
    n = io.write_scan(cfg["out"], smap)
    _say(f"wrote {n} rows to {cfg['out']}")
    m = cfg.get("loop_lines", 0)
    if m:
        if family != "harmonic":
            raise ConfigError("--loop-lines applies to the harmonic family")
        lo, hi = smap.p1[0], smap.p1[-1]
        pairs = {(k // math.gcd(k, d), d // math.gcd(k, d))
                 for d in range(1, m + 1)
                 for k in range(math.ceil(lo * d / (2 * math.pi)), math.floor(hi * d / (2 * math.pi)) + 1)}
        rows = sorted((2 * math.pi * k / d, k, d) for k, d in pairs)
        path = Path(cfg["out"]).with_name(Path(cfg["out"]).stem + "_loop_lines.csv")
        io.write_rows(path, ["p1", "k", "m"], rows)
        _say(f"wrote {len(rows)} loop lines to {path}")
    return EXIT_OK


def cmd_separatrix(cfg) -> int:
    family = cfg["family"]
    if family not in FAMILIES:
        raise ConfigError(f"family must be one of {FAMILIES}")
    branch = str(cfg["branch"]).lower()
    signs = {"both": (-1, 1), "-": (-1,), "minus": (-1,), "-1": (-1,),
             "+": (1,), "plus": (1,), "1": (1,), "+1": (1,)}.get(branch)
    if signs is None:
        raise ConfigError("branch must be +, - or both")
    ranges = parse_range(cfg["range"]) if cfg.get("range") else None
    smap = scan_map(family, ranges, cfg["res"], cfg["steps_per_unit"], cfg["workers"])
    pts = []
    for s in signs:
        pts += trace_separatrix(family, s, refinement_tol=cfg["tol"], steps_per_unit=cfg["steps_per_unit"],
                                smap=smap)
    n = io.write_separatrix(cfg["out"], pts)
    if not pts:
        _say("no separatrix crossing inside the box")
    _say(f"wrote {n} points to {cfg['out']}")
    return EXIT_OK


def _family_row(profile, n, residual):
    try:
        _, p1, p2 = family_params(profile)
    except TypeError:
        p1 = p2 = float("nan")
    return [p1, p2, n, residual]


def find_and_refine(profile, nmax, tol, window, steps, geometry="cylindrical"):
    """Detect a loop; failing that, refine the best candidates. Returns
    (rows, final_profile, n)."""
    res = loop_residuals(profile, nmax, geometry, steps)
    hits = np.nonzero(res < tol)[0]
    if len(hits):
        n = int(hits[0]) + 1
        return [_family_row(profile, n, res[n - 1])], profile, n
    if geometry != "cylindrical" or isinstance(profile, PiecewiseConstant):
        raise LoopRefinementError(f"no loop with n <= {nmax} (best residual {res.min():.3g})")
    errors = []
    for n in (np.argsort(res)[:8] + 1):
        try:
            rl = refine_loop(profile, int(n), window=window, steps_per_unit=steps)
        except LoopRefinementError as exc:
            errors.append(f"n={n}: {exc}")
            continue
        found = detect_loop(rl.profile, nmax, tol, steps_per_unit=steps)
        if found is not None:
            rows = [_family_row(profile, found.n, res[found.n - 1]),
                    _family_row(rl.profile, found.n, found.residual)]
            return rows, rl.profile, found.n
    raise LoopRefinementError("no loop found; " + "; ".join(errors[:3]))


def cmd_loop(cfg) -> int:
    prof = need_profile(cfg)
    if not cfg["refine"]:
        found = detect_loop(prof, cfg["nmax"], cfg["tol"], cfg["geometry"], cfg["steps_per_unit"])
        if found is None:
            raise LoopRefinementError(f"no loop with n <= {cfg['nmax']} at tolerance {cfg['tol']}")
        rows, final, n = [_family_row(prof, found.n, found.residual)], prof, found.n
    else:
        rows, final, n = find_and_refine(prof, cfg["nmax"], cfg["tol"], cfg["window"],
                                         cfg["steps_per_unit"], cfg["geometry"])
    io.write_loops(cfg["out"], rows)
    if final is not prof:
        _say(f"printed amplitudes: n={n} residual={rows[0][3]:.3g}")
        _say(f"refined to {format_profile(final)}")
    _say(f"n={n} residual={rows[-1][3]:.3g}")
    return EXIT_OK


def cmd_center(cfg) -> int:
    prof = need_profile(cfg)
    geometry = cfg["geometry"]
    steps = cfg["steps_per_unit"]
    duration = cfg.get("duration")
    if duration is None:
        n = cfg["n"]
        res = loop_residuals(prof, n, geometry, steps)[-1]
        if res >= cfg["tol"]:
            if not cfg["refine"] or geometry != "cylindrical" or isinstance(prof, PiecewiseConstant):
                raise NotALoopError(f"||u({n}) - I|| = {res:.3g}; not a loop")
            rl = refine_loop(prof, n, window=cfg["window"], steps_per_unit=steps)
            _say(f"refined {format_profile(prof)} -> {format_profile(rl.profile)} "
                 f"(residual {res:.3g} -> {rl.residual:.3g})")
            prof = rl.profile
        report = loop_center(prof, geometry, n, steps, loop_tol=cfg["tol"])
    else:
        report = loop_center(prof, geometry, steps_per_unit=steps, duration=duration, loop_tol=cfg["tol"])
    io.write_center(cfg["out"], report)
    _say(f"vanishing={'true' if report.vanishing else 'false'} kappa={report.kappa:.12g}")
    return EXIT_OK


def cmd_drift(cfg) -> int:
    prof = need_profile(cfg)
    F = parse_vector(cfg["force"], 2, "force")
    T = cfg.get("block_period")
    if T is None:
        # a constant field closes after one cyclotron half-turn pi/|beta|
        base = math.pi / abs(prof.beta) if isinstance(prof, Constant) and prof.beta else float(prof.period)
        T = cfg["n"] * base
    r = drift_experiment(prof, cfg["geometry"], F, cfg["blocks"], T, cfg["steps_per_unit"],
                         loop_tol=cfg["tol"])
    io.write_rows(cfg["out"], io.DRIFT_HEADER,
                  ([k, k * T, *c] for k, c in enumerate(r.centers)))
    _say(f"fitted v = ({r.fitted[0]:.10g}, {r.fitted[1]:.10g})  "
         f"predicted v = ({r.predicted[0]:.10g}, {r.predicted[1]:.10g})  "
         f"relative error = {r.relative_error:.3g}")
    return EXIT_OK


def cmd_packet(cfg) -> int:
    prof = need_profile(cfg)
    packet = GaussianPacket(parse_vector(cfg["mean"], 4, "mean"), covariance(cfg["cov"]))
    if cfg.get("inversion"):
        if not isinstance(prof, Biharmonic):
            raise ConfigError("--inversion needs a biharmonic profile")
        p1, p2 = prof.beta1, prof.beta2
        if cfg.get("refine", True):
            p1, p2 = refine_separatrix("biharmonic", p1, p2, -1, steps_per_unit=cfg["steps_per_unit"])
        res = inversion_demo(p1, p2, cfg["doubles"], packet, steps_per_unit=cfg["steps_per_unit"])
        history = [(0.0, packet)] + [(s.t, s.packet) for s in res.snapshots]
        io.write_packets(cfg["out"], history)
        _say(f"tau = {res.tau:.10g}")
        for s in res.snapshots:
            _say(f"t={s.t:g} effective time={s.effective_time:.6g} cov error={s.cov_error:.3g}")
        return EXIT_OK
    times = parse_times(cfg["times"])
    F = parse_vector(cfg["force"], 2, "force")
    history = packet_history(prof, cfg["geometry"], F, packet, times, cfg["steps_per_unit"])
    n = io.write_packets(cfg["out"], history)
    _say(f"wrote {n} snapshots to {cfg['out']}")
    return EXIT_OK


def cmd_landau(cfg) -> int:
    text = cfg.get("profile") or ""
    if text.lower().startswith("word:"):
        word = parse_word(text, cfg.get("t"))
        r = verify_word_loop(word)
        io.write_rows(cfg["out"], io.WORD_HEADER,
                      [[r.order, r.is_loop, r.threshold, r.diagonalizable, *r.product.ravel()]])
        _say(f"order={r.order or 'none'} loop={io.fmt(r.is_loop)} threshold={io.fmt(r.threshold)} "
             f"diagonalizable={io.fmt(r.diagonalizable)}")
        return EXIT_OK
    seq = parse_pulses(text)
    res = landau_sequence(seq)
    kappa = None
    if cfg.get("center"):
        kappa = landau_center_commutator(seq, cfg["steps_per_unit"]).kappa
    io.write_rows(cfg["out"], io.LANDAU_HEADER,
                  [[res.gamma, res.is_loop, kappa, kappa_closed_form(seq)]])
    msg = f"Gamma={res.gamma:.3g} loop={'true' if res.is_loop else 'false'}"
    if kappa is not None:
        msg += f" kappa={kappa:.10g}"
    _say(msg)
    return EXIT_OK


def cmd_trajectory(cfg) -> int:
    prof = need_profile(cfg)
    F = parse_vector(cfg.get("force", "0,0"), 2, "force")
    q0 = parse_vector(cfg.get("q0", "1,0,0,0"), 4, "q0")
    traj = evolve_affine(prof, cfg["geometry"], F, q0, float(cfg["t_end"]), cfg["steps_per_unit"])
    n = io.write_trajectory(cfg["out"], traj)
    _say(f"wrote {n} samples to {cfg['out']}")
    return EXIT_OK


COMMANDS = {"scan": cmd_scan, "separatrix": cmd_separatrix, "loop": cmd_loop,
            "center": cmd_center, "drift": cmd_drift, "packet": cmd_packet,
            "landau": cmd_landau, "trajectory": cmd_trajectory}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--profile", help="profile literal, e.g. biharmonic:pi/2,9.966")
    common.add_argument("--geometry", choices=GEOMETRIES)
    common.add_argument("--steps-per-unit", type=int, help=f"integrator steps per unit time (default {DEFAULT_STEPS})")
    common.add_argument("--tol", type=float)
    common.add_argument("--out", help="output CSV path")
    common.add_argument("--workers", type=int)
    common.add_argument("--config", help="flat key = value file; flags take precedence")

    p = argparse.ArgumentParser(prog="magloop", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scan", parents=[common], help="stability map of Tr b(1)")
    s.add_argument("--family", choices=FAMILIES)
    s.add_argument("--range", help="p1min:p1max,p2min:p2max")
    s.add_argument("--res", type=int)
    s.add_argument("--loop-lines", type=int, metavar="M",
                   help="also write p1 = 2 pi k/m lines for m <= M (harmonic)")

    s = sub.add_parser("separatrix", parents=[common], help="trace Tr b(1) = +-2 curves")
    s.add_argument("--family", choices=FAMILIES)
    s.add_argument("--branch", help="+, - or both")
    s.add_argument("--range")
    s.add_argument("--res", type=int)

    s = sub.add_parser("loop", parents=[common], help="find the closing period")
    s.add_argument("--nmax", type=int)
    s.add_argument("--window", help="amplitude refinement half-width")
    s.add_argument("--no-refine", dest="refine", action="store_const", const=False)

    s = sub.add_parser("center", parents=[common], help="loop center and commutator")
    s.add_argument("--n", type=int, help="loop length in periods")
    s.add_argument("--duration", help="explicit loop duration")
    s.add_argument("--window")
    s.add_argument("--no-refine", dest="refine", action="store_const", const=False)

    s = sub.add_parser("drift", parents=[common], help="drift of the center under a force")
    s.add_argument("--force", help="Fx,Fy")
    s.add_argument("--blocks", type=int)
    s.add_argument("--n", type=int, help="block length in periods")
    s.add_argument("--block-period")

    s = sub.add_parser("packet", parents=[common], help="Gaussian packet moments")
    s.add_argument("--force")
    s.add_argument("--times", help="start:stop:step or comma list")
    s.add_argument("--mean", help="4 values")
    s.add_argument("--cov", help="5 values sx2,sy2,spx2,spy2,cxp or 16 row-major")
    s.add_argument("--inversion", action="store_const", const=True,
                   help="run the inverted free evolution demo")
    s.add_argument("--doubles", type=int, help="number of double periods")
    s.add_argument("--no-refine", dest="refine", action="store_const", const=False)

    s = sub.add_parser("landau", parents=[common], help="pi-pulse sequences and kick words")
    s.add_argument("--center", action="store_const", const=True)
    s.add_argument("--t", help="value bound to t in word literals")

    s = sub.add_parser("trajectory", parents=[common], help="classical trajectory samples")
    s.add_argument("--force")
    s.add_argument("--q0")
    s.add_argument("--t-end", required=True)
    return p


_NEGATIVE = re.compile(r"^-(\.?\d|pi|e\b|\()")


def glue_negative_values(argv) -> list:
    """Turn ``--range -6:6,...`` into ``--range=-6:6,...`` so argparse does not
    read negative numbers as options."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if (tok.startswith("--") and "=" not in tok and i + 1 < len(argv)
                and _NEGATIVE.match(argv[i + 1])):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(glue_negative_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, ProfileSyntaxError, ProfileDomainError) as exc:
        print(f"magloop: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NotALoopError, NotALoopSequence, LoopRefinementError, SeparatrixError,
            ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"magloop: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"magloop: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"magloop: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
