"""Command-line entry point.

Every subcommand reads a JSON config, writes CSV/JSON/plot-data files to the
output directory and prints a one-line verdict.  Exit codes: 0 pass,
1 usage or configuration error, 2 a mathematical guarantee was violated.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .config import Config, ConfigError, load_config
from .errors import CertificateError, ExperimentError, NoSolutionError
from .harness import add_noise, aposteriori_bound, run_rate_experiment
from .io import write_csv, write_json, write_plot_data
from .modulus import (
    ModulusQuery,
    modulus_bounds,
    modulus_closed_form,
    modulus_oracle,
    optimality_check,
    spectrum_levels,
)
from .operators import ForwardOperator, illposedness_demo
from .profile import check_assumption
from .spectral import hp_norm, in_source_set
from .qrm import (
    Apriori,
    Manual,
    RegularizerConfig,
    apriori_alpha,
    bias_bound,
    discrepancy,
    discrepancy_target,
    morozov_select,
    noise_bound,
    qrm_invert,
)

OUTPUT_ENV = "BIPARABOLIC_QRM_OUT"
DEFAULT_OUTPUT = "qrm-output"
EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2
_RTOL = 1e-12


class _Run:
    """Shared state for one subcommand invocation."""

    def __init__(self, cfg: Config, config_path: Path, out: Path, figures: bool):
        self.cfg = cfg
        self.base = config_path.parent
        self.out = out
        self.figures = figures
        self.written: list[Path] = []
        self.plots: dict[str, dict[str, Path]] = {}

    def domain_profile(self):
        return self.cfg.build_domain(), self.cfg.build_profile(self.base)

    def operator(self):
        return ForwardOperator(*self.domain_profile())

    def csv(self, name, header, rows):
        self.written.append(write_csv(self.out / name, header, rows))

    def json(self, name, obj):
        self.written.append(write_json(self.out / name, obj))

    def plot(self, figure, label, name, x, y, labels):
        path = write_plot_data(self.out / name, x, y, labels)
        self.written.append(path)
        self.plots.setdefault(figure, {})[label] = path

    def render(self, **axes):
        if not self.figures:
            return
        from .plotting import render_loglog

        for figure, series in self.plots.items():
            xlabel, ylabel = axes.get(figure, ("x", "y"))
            self.written.append(
                render_loglog(series, self.out / f"{figure}.png", figure, xlabel, ylabel)
            )


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_check_psi(run: _Run):
    domain, profile = run.domain_profile()
    rep = check_assumption(profile, domain.lambda1)
    run.json("check_psi.json", rep.to_dict())
    if rep.admissible:
        line = (
            f"check-psi: admissible case={rep.case} kappa1={rep.kappa1!r} tau0={rep.tau0!r} "
            f"kappa2={rep.kappa2!r} C={rep.constant!r}"
        )
        return EXIT_OK, line
    return EXIT_USAGE, f"check-psi: NOT admissible: {rep.reason}"


def cmd_forward(run: _Run):
    op = run.operator()
    f, _ = run.cfg.build_source(op.domain)
    h = op.apply_t(f)
    lam = op.domain.eigenvalues
    scaled = lam**2 * np.abs(op.mu)
    C = op.constant
    ok = bool(np.all(scaled >= C * (1 - _RTOL)) and np.all(scaled <= op.psi_sup * (1 + _RTOL)))
    n = np.arange(1, len(lam) + 1)
    run.csv("forward.csv", ["n", "lambda", "mu", "lambda2_abs_mu", "f", "h"],
            zip(n, lam, op.mu, scaled, f.values, h.values))
    run.json("forward.json", {
        "constant": C,
        "psi_sup": op.psi_sup,
        "min_lambda2_abs_mu": float(scaled.min()),
        "max_lambda2_abs_mu": float(scaled.max()),
        "mu_bounds_hold": ok,
        "source_norm": f.norm(),
        "data_norm": h.norm(),
        "truncation_tail": op.truncation_tail_bound(f.norm()),
    })
    run.plot("mu", "lambda^2 |mu|", "mu_scaled.dat", lam, scaled, ("lambda", "lambda2_abs_mu"))
    run.render(mu=("lambda", "lambda^2 |mu|"))
    line = (
        f"forward: |h|={h.norm()!r} C={C!r} <= lambda^2|mu| in "
        f"[{float(scaled.min())!r}, {float(scaled.max())!r}] <= {op.psi_sup!r} verdict={_verdict(ok)}"
    )
    return (EXIT_OK if ok else EXIT_VIOLATION), line


def _choose_alpha(cfg: Config, h_delta, delta, cls):
    reg = cfg.regularizer
    if reg.rule == "manual":
        return RegularizerConfig(reg.b, reg.alpha, Manual())
    if delta <= 0:
        raise ConfigError(f"experiment.delta: rule {reg.rule!r} needs a positive noise level")
    if reg.rule == "apriori":
        return RegularizerConfig(reg.b, apriori_alpha(delta, cls, reg.b), Apriori(delta, cls.rho, cls.p))
    return morozov_select(h_delta, delta, reg.xi, reg.b, reg.sigma)


def cmd_invert(run: _Run):
    run.cfg.require("source", "regularizer")
    op = run.operator()
    f, cls = run.cfg.build_source(op.domain)
    if not in_source_set(f, cls):
        raise ConfigError(f"source: H_p norm {hp_norm(f, cls.p):.6g} exceeds rho={cls.rho}")
    exp = run.cfg.experiment
    delta = exp.delta
    h_delta = add_noise(op.apply_t(f), delta, exp.seed)
    rcfg = _choose_alpha(run.cfg, h_delta, delta, cls)
    rec = qrm_invert(op, h_delta, rcfg)
    err = (rec.source - f).norm()
    lam1 = op.domain.lambda1
    bias = bias_bound(cls, rcfg.alpha, rcfg.b, lam1)
    noise = noise_bound(delta, rcfg.alpha, rcfg.b, op.constant)
    if run.cfg.regularizer.rule == "aposteriori":
        reg = run.cfg.regularizer
        bound = aposteriori_bound(delta, cls, reg.b, reg.xi, reg.sigma, op.constant, op.psi_sup, lam1)
    else:
        bound = bias + noise
    ok = err <= bound * (1 + _RTOL)
    n = np.arange(1, op.domain.n_modes + 1)
    run.csv("invert.csv", ["n", "f_true", "f_reconstructed", "h_delta"],
            zip(n, f.values, rec.source.values, h_delta.values))
    run.json("invert.json", {
        "rule": run.cfg.regularizer.rule,
        "b": rcfg.b,
        "alpha": rcfg.alpha,
        "delta": delta,
        "error": err,
        "bias_bound": bias,
        "noise_bound": noise,
        "bound": bound,
        "bound_holds": ok,
        "discrepancy": rec.discrepancy,
        "residual": rec.residual,
        "stability_bound": rec.stability_bound,
    })
    run.plot("coefficients", "|f|", "invert_true.dat", n, np.abs(f.values), ("n", "abs_f"))
    run.plot("coefficients", "|f_alpha|", "invert_rec.dat", n, np.abs(rec.source.values), ("n", "abs_f_alpha"))
    run.render(coefficients=("n", "coefficient magnitude"))
    line = f"invert: alpha={rcfg.alpha!r} error={err!r} bound={bound!r} verdict={_verdict(ok)}"
    return (EXIT_OK if ok else EXIT_VIOLATION), line


def cmd_morozov(run: _Run):
    run.cfg.require("source", "regularizer")
    reg = run.cfg.regularizer
    op = run.operator()
    f, _ = run.cfg.build_source(op.domain)
    exp = run.cfg.experiment
    if exp.delta <= 0:
        raise ConfigError("experiment.delta: the discrepancy principle needs a positive noise level")
    h_delta = add_noise(op.apply_t(f), exp.delta, exp.seed)
    alphas = np.geomspace(1e-12, 1e12, 50)
    zeta = np.array([discrepancy(h_delta, a, reg.b) for a in alphas])
    monotone = bool(np.all(np.diff(zeta) >= 0))
    strict = bool(np.all(np.diff(zeta) > 0))
    rcfg = morozov_select(h_delta, exp.delta, reg.xi, reg.b, reg.sigma)
    target = discrepancy_target(exp.delta, reg.xi, reg.b, reg.sigma)
    resid = abs(discrepancy(h_delta, rcfg.alpha, reg.b) - target) / target
    ok = monotone and resid <= 1e-10
    run.csv("morozov.csv", ["alpha", "zeta"], zip(alphas, zeta))
    run.json("morozov.json", {
        "alpha": rcfg.alpha,
        "target": target,
        "relative_residual": resid,
        "data_norm": h_delta.norm(),
        "zeta_at_min_alpha": float(zeta[0]),
        "gap_at_max_alpha": float(h_delta.norm() - zeta[-1]),
        "monotone": monotone,
        "strictly_increasing": strict,
    })
    run.plot("discrepancy", "zeta", "morozov_zeta.dat", alphas, zeta, ("alpha", "zeta"))
    run.render(discrepancy=("alpha", "zeta"))
    line = f"morozov: alpha={rcfg.alpha!r} residual={resid:.3e} monotone={monotone} verdict={_verdict(ok)}"
    return (EXIT_OK if ok else EXIT_VIOLATION), line


def cmd_rate(run: _Run):
    domain, profile = run.domain_profile()
    spec = run.cfg.build_spec(domain, profile)
    rep = run_rate_experiment(spec, max_workers=run.cfg.experiment.workers)
    run.csv("rate.csv", ["delta", "alpha", "error", "bound", "slope_partial"], rep.csv_rows())
    run.json("rate.json", rep.to_dict())
    used = [pt for pt in rep.points if not pt.skipped]
    d = [pt.delta for pt in used]
    run.plot("rate", "mean error", "rate_error.dat", d, [pt.mean_error for pt in used], ("delta", "error"))
    run.plot("rate", "bound", "rate_bound.dat", d, [pt.bound for pt in used], ("delta", "bound"))
    run.render(rate=("delta", "error"))
    line = (
        f"rate: rule={rep.rule} p={rep.p:g} b={rep.b:g} slope={rep.slope:.4f} "
        f"expected={rep.expected_exponent:.4f} tol={rep.slope_tolerance} points={rep.fit_points} "
        f"verdict={_verdict(rep.verdict)}"
    )
    return (EXIT_OK if rep.verdict else EXIT_VIOLATION), line


def cmd_modulus(run: _Run):
    run.cfg.require("modulus")
    mb = run.cfg.modulus
    op = run.operator()
    mu = tuple(op.mu)
    rho = run.cfg.source.rho if run.cfg.source is not None else 1.0
    r = mb.r if mb.r is not None else op.psi_sup ** (-mb.p / 2) * rho
    rows = []
    worst = 0.0
    for lv in spectrum_levels(mu, mb.p, r, mb.convention):
        q = ModulusQuery(r, float(lv), mb.p, mu, mb.convention)
        closed, oracle = modulus_closed_form(q), modulus_oracle(q)
        worst = max(worst, abs(oracle - closed) / closed)
        rows.append((float(lv), "spectrum", closed, oracle, None, None))
    levels = spectrum_levels(mu, mb.p, r, mb.convention)
    inside = True
    for dl in np.geomspace(levels.min() * 1.013, levels.max() * 0.987, mb.off_spectrum):
        q = ModulusQuery(r, float(dl), mb.p, mu, mb.convention)
        lo, hi = modulus_bounds(q)
        oracle = modulus_oracle(q)
        inside &= lo * (1 - _RTOL) <= oracle <= hi * (1 + _RTOL)
        rows.append((float(dl), "off_spectrum", None, oracle, lo, hi))
    run.csv("modulus.csv", ["delta", "kind", "closed_form", "oracle", "lower", "upper"], rows)
    summary = {
        "convention": mb.convention,
        "r": r,
        "p": mb.p,
        "max_relative_difference": worst,
        "oracle_inside_bounds": bool(inside),
    }
    ok = worst <= 1e-9 and inside
    reg, src = run.cfg.regularizer, run.cfg.source
    band = None
    eligible = reg is not None and src is not None and (
        (reg.rule == "apriori" and src.p < reg.b)
        or (reg.rule == "aposteriori" and reg.b > 2 and src.p < reg.b - 2)
    )
    if eligible and run.cfg.experiment.deltas is not None:
        _, cls = run.cfg.build_source(op.domain)
        deltas = run.cfg.experiment.delta_grid()
        opt = optimality_check(op, cls, reg.b, deltas, run.cfg.experiment.seed, mb.samples,
                               rule=reg.rule, xi=reg.xi)
        run.csv("optimality.csv", ["delta", "alpha", "qrm_worst", "omega_lower", "ratio", "ratio_ceiling"],
                [(x.delta, x.alpha, x.qrm_worst, x.omega_lower, x.ratio, x.ratio_ceiling) for x in opt.rows])
        summary["optimality"] = opt.to_dict()
        run.plot("optimality", "ratio", "optimality_ratio.dat", deltas, [x.ratio for x in opt.rows], ("delta", "ratio"))
        run.render(optimality=("delta", "QRM error / modulus lower bound"))
        band = opt.band
        ok = ok and opt.bounded
    run.json("modulus.json", summary)
    line = f"modulus: closed-form vs oracle max rel diff={worst:.3e} inside_bounds={bool(inside)}"
    if band is not None:
        line += f" ratio_band=[{band[0]:.4g}, {band[1]:.4g}]"
    return (EXIT_OK if ok else EXIT_VIOLATION), line + f" verdict={_verdict(ok)}"


def cmd_illposed(run: _Run):
    op = run.operator()
    k_max = min(run.cfg.experiment.k_max, op.domain.n_modes)
    rows = illposedness_demo(op, k_max)
    ratios_ok = all(row.ratio >= 1 - _RTOL for row in rows)
    shrinking = all(b.data_norm < a.data_norm for a, b in zip(rows, rows[1:]))
    ok = ratios_ok and shrinking
    run.csv("illposed.csv", ["k", "lambda", "data_norm", "source_norm", "ratio"],
            [(r.k, r.lam, r.data_norm, r.source_norm, r.ratio) for r in rows])
    ks = [r.k for r in rows]
    run.plot("illposed", "|h_k|", "illposed_data.dat", ks, [r.data_norm for r in rows], ("k", "data_norm"))
    run.plot("illposed", "|f_k|", "illposed_source.dat", ks, [r.source_norm for r in rows], ("k", "source_norm"))
    run.render(illposed=("k", "norm"))
    line = (
        f"illposed: k<={k_max} min ratio={min(r.ratio for r in rows)!r} "
        f"|h_k| -> {rows[-1].data_norm!r} verdict={_verdict(ok)}"
    )
    return (EXIT_OK if ok else EXIT_VIOLATION), line


COMMANDS = {
    "check-psi": cmd_check_psi,
    "forward": cmd_forward,
    "invert": cmd_invert,
    "morozov": cmd_morozov,
    "rate": cmd_rate,
    "modulus": cmd_modulus,
    "illposed": cmd_illposed,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biparabolic-qrm",
        description="Source identification for the bi-parabolic equation by quasi-reversibility.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", type=Path, help="JSON configuration file")
        p.add_argument("--seed", type=int, help="override experiment.seed")
        p.add_argument("--modes", type=int, help="override domain.modes")
        p.add_argument("--out", type=Path, help=f"output directory (default: ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
        p.add_argument("--figures", action="store_true", help="also render PNG figures with matplotlib")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.modes is not None and args.modes < 1:
            raise ConfigError("--modes must be positive")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        cfg = cfg.with_overrides(seed=args.seed, modes=args.modes)
        out = args.out or cfg.experiment.output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"output directory {out} is not writable")
        run = _Run(cfg, args.config, out, args.figures)
        code, line = COMMANDS[args.command](run)
    except (ConfigError, FileNotFoundError, PermissionError, IsADirectoryError,
            CertificateError, NoSolutionError, ExperimentError, ValueError) as exc:
        print(f"{args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(line)
    return code


if __name__ == "__main__":
    sys.exit(main())
