"""Command-line batch driver.

Subcommands:
  sweep           run an (E, B) scan from a TOML config, emit rate tables
  zeeman          tabulate monomer Zeeman levels vs field
  fit             one-parameter threshold fit of tabulated rates
  critical-field  field where the Zeeman release equals a barrier height
  extrapolate     pull a high-temperature rate down to the barrier height

Sweeps are deterministic: identical configs produce byte-identical output
files, and S-matrices can be cached on disk keyed by (config, E, B, M).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import pickle
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import __version__
from .channels import CouplingMatrix, enumerate_basis
from .dwba import dwba_cross_sections
from .monomer import CaseBState, MonomerParams, zeeman_levels
from .observables import ThermalRate, block_cross_sections, thermal_average
from .potential import model_from_config
from .propagator import SMatrix, smatrix
from .threshold import (
    ThresholdFit,
    critical_field,
    extrapolate_K0_from_high_T,
    fit_K0,
)
from .units import DEFAULT_REDUCED_MASS_AMU, velocity_cm_per_s

CACHE_MAGIC = b"CSCATC1\x00"

SCHEMA = """\
# Sweep configuration schema (TOML).  Units: Kelvin, gauss, bohr, amu.

[monomer]
b_rot = 2.07          # rotational constant
lambda = 2.87         # spin-spin constant
gamma = -0.012        # spin-rotation constant
n_max = 6             # even rotational cutoff of the internal basis

[potential]
default = true        # built-in model surface; or give explicit terms:
# terms = [
#   { lambda = 0, form = "lennard_jones", c12 = 6.1e10, c6 = 2.6e6 },
#   { lambda = 2, form = "lennard_jones", c12 = 9.2e9, c6 = 3.9e5 },
# ]                   # forms: lennard_jones, morse, dispersion_tail

[collision]
initial = [0, 1, 1]   # incident monomer state N, J, M_J
# reduced_mass = 2.77 # amu; defaults to the 3He + (17O)2 pair
energies = { min = 1e-6, max = 1e-3, points = 7, scale = "log" }
# or energies = { values = [1e-6, 1e-5] }
fields = { values = [0.0, 1.0, 10.0] }
# temperatures = { values = [0.1, 1.0] }  # optional thermal averages

[numerics]
l_max = 2
n_max = 2
all_m = false         # include entrance partial waves beyond s-wave
# h_well = 0.05       # propagation step in the well region

[output]
prefix = "run"        # files <prefix>_rates.csv/.json (+ _thermal, _zeeman)
format = "csv"        # csv, json, or both
"""


def _grid(section) -> np.ndarray:
    if "values" in section:
        return np.asarray(section["values"], dtype=float)
    lo, hi, n = section["min"], section["max"], int(section["points"])
    if section.get("scale", "log") == "log":
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


@dataclass(frozen=True)
class RunConfig:
    """Validated sweep configuration."""

    raw: dict = field(repr=False)
    params: MonomerParams
    potential_section: dict
    initial: CaseBState
    reduced_mass: float
    energies: np.ndarray
    fields: np.ndarray
    temperatures: np.ndarray
    l_max: int
    n_max: int
    all_m: bool
    h_well: float
    prefix: str
    formats: tuple[str, ...]

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        mono = dict(raw.get("monomer", {}))
        if "lambda" in mono:
            mono["lam"] = mono.pop("lambda")
        numerics = raw.get("numerics", {})
        n_max = int(numerics.get("n_max", mono.pop("n_max", 2)))
        params = MonomerParams(**{**mono, "n_max": n_max})
        coll = raw["collision"]
        initial = CaseBState(*coll["initial"])
        out = raw.get("output", {})
        fmt = out.get("format", "csv")
        formats = ("csv", "json") if fmt == "both" else (fmt,)
        if any(f not in ("csv", "json") for f in formats):
            raise ValueError(f"unknown output format {fmt!r}")
        temps = coll.get("temperatures")
        return cls(
            raw=raw,
            params=params,
            potential_section=raw.get("potential", {"default": True}),
            initial=initial,
            reduced_mass=float(coll.get("reduced_mass", DEFAULT_REDUCED_MASS_AMU)),
            energies=_grid(coll["energies"]),
            fields=_grid(coll["fields"]),
            temperatures=_grid(temps) if temps else np.array([]),
            l_max=int(numerics.get("l_max", 2)),
            n_max=n_max,
            all_m=bool(numerics.get("all_m", False)),
            h_well=float(numerics.get("h_well", 0.05)),
            prefix=str(out.get("prefix", "run")),
            formats=formats,
        )

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))

    def hash(self) -> str:
        physics = {k: v for k, v in self.raw.items() if k != "output"}
        blob = json.dumps(physics, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def m_blocks(self) -> tuple[int, ...]:
        if self.all_m:
            return tuple(
                range(self.initial.m_j - self.l_max, self.initial.m_j + self.l_max + 1)
            )
        return (self.initial.m_j,)


def _cache_path(cache_dir, cfg_hash, e, b, m) -> Path:
    key = hashlib.sha256(
        f"{cfg_hash}:{e!r}:{b!r}:{m}".encode()
    ).hexdigest()
    return Path(cache_dir) / f"{key}.smat"


def _cache_load(path: Path):
    try:
        blob = path.read_bytes()
    except OSError:
        return None
    if not blob.startswith(CACHE_MAGIC):
        return None
    return pickle.loads(blob[len(CACHE_MAGIC):])


def _cache_store(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(CACHE_MAGIC + pickle.dumps(payload, protocol=4))


def solve_point(cfg: RunConfig, e_coll: float, b_field: float, m_total: int,
                cache_dir=None, want_dwba=False):
    """One (E, B, M) work unit: cross-section contributions of this block.

    Returns (sigma_by_final_label, dwba_by_final_label or None); raises if
    the entrance state is absent from the block.
    """
    basis = enumerate_basis(
        cfg.params, cfg.l_max, cfg.n_max, m_total, b_field, cfg.reduced_mass
    )
    i0 = next(
        (i for i, ch in enumerate(basis.channels) if ch.state == cfg.initial),
        None,
    )
    if i0 is None:
        raise ValueError(f"incident state {cfg.initial} absent from block M={m_total}")
    e_total = basis.channels[i0].threshold + e_coll
    model = model_from_config(cfg.potential_section)
    coupling = CouplingMatrix(basis, model)

    smat = None
    cache_file = None
    if cache_dir is not None:
        cache_file = _cache_path(cache_dir, cfg.hash(), e_coll, b_field, m_total)
        payload = _cache_load(cache_file)
        if payload is not None:
            smat = SMatrix(
                payload["matrix"], payload["open_indices"], payload["k_open"],
                payload["e_total"], basis,
            )
    if smat is None:
        smat = smatrix(coupling, e_total)
        if cache_file is not None:
            _cache_store(cache_file, {
                "version": __version__,
                "matrix": smat.matrix,
                "open_indices": smat.open_indices,
                "k_open": smat.k_open,
                "e_total": smat.e_total,
            })

    sigma, _ = block_cross_sections(smat, cfg.initial)
    result = {str(f): v for f, v in sigma.items()}
    dwba = None
    if want_dwba and m_total == cfg.initial.m_j:
        entrance = basis.index_of(cfg.initial, 0, 0)
        dwba = {
            str(f): v
            for f, v in dwba_cross_sections(coupling, entrance, e_total).items()
        }
    return result, dwba


def _point_task(args):
    cfg_raw, e, b, m, cache_dir, want_dwba = args
    cfg = RunConfig.from_dict(cfg_raw)
    try:
        return e, b, m, solve_point(cfg, e, b, m, cache_dir, want_dwba), None
    except Exception as exc:  # per-point failure: record, keep sweeping
        return e, b, m, None, f"{type(exc).__name__}: {exc}"


def _format_float(x) -> str:
    return f"{x:.12e}"


def _write_csv(path, meta_line, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"# {meta_line}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(
                ",".join(
                    _format_float(v) if isinstance(v, float) else str(v)
                    for v in row
                )
                + "\n"
            )


def _write_json(path, meta, header, rows):
    payload = {"meta": meta, "rows": [dict(zip(header, r)) for r in rows]}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def run_sweep(cfg: RunConfig, workers=1, cache_dir=None, want_dwba=False,
              out_dir="."):
    """Execute the scan and write the output tables; returns file paths."""
    tasks = [
        (cfg.raw, float(e), float(b), m, cache_dir, want_dwba)
        for e in cfg.energies
        for b in cfg.fields
        for m in cfg.m_blocks()
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_point_task, tasks))
    else:
        outcomes = [_point_task(t) for t in tasks]

    sigma: dict = {}
    dwba_sigma: dict = {}
    errors = []
    for e, b, m, result, err in outcomes:
        if err is not None:
            errors.append({"E_K": e, "B_gauss": b, "M": m, "error": err})
            continue
        block_sigma, block_dwba = result
        point = sigma.setdefault((e, b), {})
        for label, v in block_sigma.items():
            point[label] = point.get(label, 0.0) + v
        if block_dwba is not None:
            dwba_sigma[(e, b)] = block_dwba

    finals = sorted({f for point in sigma.values() for f in point})
    header = ["E_K", "B_gauss", "initial", "final", "sigma_cm2", "K_cm3s"]
    if want_dwba:
        header += ["sigma_dwba_cm2", "K_dwba_cm3s"]
    rows = []
    for e in cfg.energies:
        for b in cfg.fields:
            point = sigma.get((float(e), float(b)))
            if point is None:
                continue
            v = velocity_cm_per_s(float(e), cfg.reduced_mass)
            for f in finals:
                s = point.get(f, 0.0)
                row = [float(e), float(b), str(cfg.initial), f, s, v * s]
                if want_dwba:
                    sd = dwba_sigma.get((float(e), float(b)), {}).get(f, 0.0)
                    row += [sd, v * sd]
                rows.append(row)

    meta = {
        "config_hash": cfg.hash(),
        "version": __version__,
        "m_blocks": list(cfg.m_blocks()),
        "l_max": cfg.l_max,
        "n_max": cfg.n_max,
        "errors": errors,
    }
    meta_line = f"config={cfg.hash()} version={__version__}"
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in cfg.formats:
        path = out / f"{cfg.prefix}_rates.csv"
        _write_csv(path, meta_line, header, rows)
        written.append(path)
    if "json" in cfg.formats:
        path = out / f"{cfg.prefix}_rates.json"
        _write_json(path, meta, header, rows)
        written.append(path)

    if cfg.temperatures.size:
        written += _write_thermal(cfg, sigma, meta, meta_line, out)
    return written, errors


def _write_thermal(cfg, sigma, meta, meta_line, out: Path):
    init = str(cfg.initial)
    header = ["T_K", "B_gauss", "K_el_cm3s", "K_loss_cm3s", "tail_mass"]
    rows = []
    e_grid = np.array(sorted({e for e, _ in sigma}))
    for t in cfg.temperatures:
        for b in cfg.fields:
            s_el = np.array([sigma[(e, float(b))].get(init, 0.0) for e in e_grid])
            s_loss = np.array([
                sum(v for f, v in sigma[(e, float(b))].items() if f != init)
                for e in e_grid
            ])
            r_el: ThermalRate = thermal_average(e_grid, s_el, float(t), cfg.reduced_mass)
            r_loss = thermal_average(e_grid, s_loss, float(t), cfg.reduced_mass)
            rows.append([float(t), float(b), r_el.value, r_loss.value, r_el.tail_mass])
    written = []
    if "csv" in cfg.formats:
        path = out / f"{cfg.prefix}_thermal.csv"
        _write_csv(path, meta_line, header, rows)
        written.append(path)
    if "json" in cfg.formats:
        path = out / f"{cfg.prefix}_thermal.json"
        _write_json(path, meta, header, rows)
        written.append(path)
    return written


def _parse_state(text: str) -> CaseBState:
    parts = [int(p) for p in text.replace(",", " ").split()]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("state must be three integers: N J M_J")
    return CaseBState(*parts)


def _cmd_sweep(args):
    if args.print_schema:
        print(SCHEMA, end="")
        return 0
    if args.config is None:
        print("error: --config is required (or use --print-schema)", file=sys.stderr)
        return 2
    cfg = RunConfig.from_file(args.config)
    if args.all_m:
        cfg = RunConfig.from_dict(
            {**cfg.raw, "numerics": {**cfg.raw.get("numerics", {}), "all_m": True}}
        )
    written, errors = run_sweep(
        cfg,
        workers=args.workers,
        cache_dir=args.cache,
        want_dwba=args.dwba,
        out_dir=args.out_dir,
    )
    for path in written:
        print(path)
    for err in errors:
        print(f"warning: point failed: {err}", file=sys.stderr)
    return 0 if not errors else 1


def _cmd_zeeman(args):
    params = MonomerParams(n_max=args.n_max)
    grid = np.linspace(args.b_min, args.b_max, args.points)
    header = ["B_gauss", "N", "J", "M_J", "energy_K", "weak_field_seeker"]
    rows = []
    for curve in zeeman_levels(params, grid):
        st = curve.labels
        for b, e in zip(grid, curve.energy):
            rows.append([float(b), st.n, st.j, st.m_j, float(e),
                         int(curve.weak_field_seeking)])
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    path = Path(args.output)
    if args.format == "json":
        _write_json(path, {"version": __version__}, header, rows)
    else:
        _write_csv(path, f"version={__version__}", header, rows)
    print(path)
    return 0


def _cmd_fit(args):
    samples = []
    with open(args.input) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line[0].isalpha():
                continue
            e, b, k = (float(x) for x in line.split(",")[:3])
            samples.append((e, b, k))
    report = fit_K0(
        samples, args.e0, l_i=args.l_i, l_f=args.l_f, delta_mj=args.delta_mj,
        params=MonomerParams(),
    )
    print(json.dumps({
        "K0_cm3s": report.fit.k0,
        "E0_K": args.e0,
        "L_i": args.l_i,
        "L_f": args.l_f,
        "delta_MJ": args.delta_mj,
        "n_used": report.n_used,
        "n_rejected": report.n_rejected,
        "rms_log_residual": report.rms_log_residual,
        "max_log_residual": report.max_log_residual,
        "window_K": args.e0,
    }, indent=1, sort_keys=True))
    return 0


def _cmd_critical_field(args):
    params = MonomerParams(n_max=args.n_max)
    b = critical_field(params, args.initial, args.final, args.e0)
    print(json.dumps({
        "initial": str(args.initial),
        "final": str(args.final),
        "E0_K": args.e0,
        "B_critical_gauss": b,
    }, indent=1, sort_keys=True))
    return 0 if b is not None else 1


def _cmd_extrapolate(args):
    k0 = extrapolate_K0_from_high_T(args.k_high, args.e_high, args.e0, args.l_f)
    fit = ThresholdFit(k0, args.e0, l_f=args.l_f)
    print(json.dumps({
        "K0_cm3s": k0,
        "E0_K": args.e0,
        "L_f": args.l_f,
        "window_K": args.e0,
        "check_at_E0": float(fit.evaluate(args.e0, 0.0)),
    }, indent=1, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coldscatter",
        description="Coupled-channel cold-collision rates in a magnetic field",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run an (E, B) scan from a TOML config")
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--print-schema", action="store_true",
                   help="print the documented config schema and exit")
    p.add_argument("--all-m", action="store_true",
                   help="sum every total-projection block, not just s-wave entrance")
    p.add_argument("--dwba", action="store_true",
                   help="add first-order (distorted-wave) columns")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cache", default=None, help="S-matrix cache directory")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("zeeman", help="tabulate monomer levels vs field")
    p.add_argument("--b-min", type=float, default=0.0)
    p.add_argument("--b-max", type=float, default=5000.0)
    p.add_argument("--points", type=int, default=51)
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", default="zeeman.csv")
    p.set_defaults(func=_cmd_zeeman)

    p = sub.add_parser("fit", help="threshold fit of (E, B, K) samples")
    p.add_argument("--input", required=True, help="CSV with columns E_K,B_gauss,K_cm3s")
    p.add_argument("--e0", type=float, required=True)
    p.add_argument("--l-i", type=int, default=0)
    p.add_argument("--l-f", type=int, default=2)
    p.add_argument("--delta-mj", type=int, default=2)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("critical-field", help="field matching a barrier height")
    p.add_argument("--initial", type=_parse_state, default=CaseBState(0, 1, 1))
    p.add_argument("--final", type=_parse_state, default=CaseBState(0, 1, -1))
    p.add_argument("--e0", type=float, required=True)
    p.add_argument("--n-max", type=int, default=6)
    p.set_defaults(func=_cmd_critical_field)

    p = sub.add_parser("extrapolate", help="high-temperature pullback of K0")
    p.add_argument("--k-high", type=float, required=True)
    p.add_argument("--e-high", type=float, required=True)
    p.add_argument("--e0", type=float, required=True)
    p.add_argument("--l-f", type=int, default=2)
    p.set_defaults(func=_cmd_extrapolate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
