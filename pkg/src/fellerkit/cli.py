"""Command-line front end: ``filter``, ``diagnose``, ``equivalence`` and ``export``.

Exit codes: 0 success; 1 equivalence agreement below 100%; 2 invalid input
(spec errors, unknown ids or conditions, budget exceeded); 3 a diagnosis
with an INCONCLUSIVE verdict.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Sequence

from .continuity import (
    DEFAULT_EPS,
    DEFAULT_FAIL_FLOOR,
    ConditionId,
    ConditionReport,
    ContinuitySet,
    ContinuousFunction,
    LscFunction,
    Verdict,
    check_assumption_h,
    check_assumption_kern,
    check_assumption_m,
    condition_gap,
    equivalence_suite,
    SequenceProbe,
)
from .filter import run_filter
from .instances import ORACLE_BUDGET, Truth, generate_instance
from .kernel import JointKernel
from .measure import DomainError, Space
from .specfile import SpecError, dumps, export_document, family_for, instance_document, load, resolve_atom

EXIT_OK, EXIT_DISAGREE, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class InputError(Exception):
    pass


def _write(out_dir: str | None, name: str, text: str, stdout) -> None:
    if out_dir is None:
        stdout.write(text)
        return
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)


def _csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _ids(text: str | None) -> list[str]:
    if not text:
        return []
    return [t.strip() for t in text.split(",") if t.strip()]


# ---------------------------------------------------------------------------
# filter


def cmd_filter(args, stdout, stderr) -> int:
    spec = load(args.spec)
    if spec.model is None:
        raise InputError(f"{spec.name} is a kernel document; filter needs a model")
    model = spec.model
    z0 = spec.prior(args.prior) if args.prior else _sole_prior(spec)
    actions = [resolve_atom(model.A, a, f"--actions[{i}]") for i, a in enumerate(_ids(args.actions))]
    observations = [resolve_atom(model.Y, y, f"--observations[{i}]") for i, y in enumerate(_ids(args.observations))]
    y0 = resolve_atom(model.Y, args.y0, "--y0") if args.y0 else None
    traj = run_filter(model, z0, actions, observations, y0)
    for step in traj.flagged:
        stderr.write(
            f"warning: step {step.index} observation {model.Y.label(step.observation)} has zero evidence; "
            "belief reset by convention (ZERO_EVIDENCE)\n"
        )
    if args.format == "json":
        text = json.dumps({"spec": spec.name, "trajectory": traj.rows()}, indent=2) + "\n"
    else:
        text = traj.to_csv()
    _write(args.out_dir, f"trajectory.{args.format}", text, stdout)
    if args.out_dir is not None:
        final = ", ".join(f"{model.W.label(w)}: {p!r}" for w, p in traj.final.sorted_items())
        stdout.write(f"final belief {{{final}}}\n")
    return EXIT_OK


def _sole_prior(spec):
    if len(spec.priors) != 1:
        raise InputError(f"choose a prior with --prior; declared: {sorted(spec.priors)}")
    return next(iter(spec.priors.values()))


# ---------------------------------------------------------------------------
# diagnose


CONDITION_NAMES = [c.value for c in ConditionId] + ["ALL"]


def _diagnose_reports(spec, kernel: JointKernel, seq, conditions, family_name, eps, fail_floor) -> list[ConditionReport]:
    reports: list[ConditionReport] = []
    if "ALL" in conditions:
        suite = equivalence_suite(kernel, seq, eps, fail_floor, plan=spec.witness_plan(kernel))
        return list(suite.conditions.values())
    family = family_for(spec, kernel, family_name)
    probe = SequenceProbe(kernel, seq)
    plan = None
    for cond in conditions:
        cid = ConditionId(cond)
        if cid in (ConditionId.WTV_B, ConditionId.CLOSED_C, ConditionId.CONTSET_D, ConditionId.LSC_E):
            plan = plan or spec.witness_plan(kernel)
        if cid is ConditionId.SUF_A:
            gaps = [condition_gap(kernel, seq, cid, ContinuousFunction(f), eps, fail_floor, probe=probe) for f in family]
        elif cid is ConditionId.WTV_B:
            gaps = [condition_gap(kernel, seq, cid, w, eps, fail_floor, probe=probe) for w in plan.open_sets()]
        elif cid is ConditionId.CLOSED_C:
            gaps = [condition_gap(kernel, seq, cid, w, eps, fail_floor, probe=probe) for w in plan.closed_sets()]
        elif cid is ConditionId.CONTSET_D:
            limit = probe.limit_s1
            certified = [ContinuitySet(s) for s in plan.sets if s.boundary_mass(limit) == 0.0]
            gaps = [condition_gap(kernel, seq, cid, w, eps, fail_floor, probe=probe) for w in certified]
        elif cid is ConditionId.LSC_E:
            gaps = [condition_gap(kernel, seq, cid, LscFunction(f), eps, fail_floor, probe=probe) for f in plan.lsc]
        elif cid is ConditionId.MARGINAL_TV:
            gaps = [condition_gap(kernel, seq, cid, None, eps, fail_floor, probe=probe)]
        elif cid is ConditionId.ASSUMPTION_KERN:
            discrete = isinstance(kernel.s1, Space) and kernel.s1.metric == "discrete"
            base = None if discrete else spec.witness_plan(kernel).base
            reports.append(check_assumption_kern(kernel, seq, eps, fail_floor, base=base, probe=probe))
            continue
        elif cid is ConditionId.ASSUMPTION_H:
            fam = None if isinstance(kernel.s1, Space) else family
            reports.append(check_assumption_h(kernel, seq, fam, eps, fail_floor))
            continue
        else:
            reports.append(check_assumption_m(kernel, seq, family, eps, fail_floor, probe=probe))
            continue
        reports.append(ConditionReport.of(cid, gaps))
    return reports


def cmd_diagnose(args, stdout, stderr) -> int:
    spec = load(args.spec)
    requests = []
    if args.sequence:
        conditions = _ids(args.conditions) or ["SUF_A"]
        requests.append({"sequence": args.sequence, "conditions": conditions, "family": args.family})
    else:
        requests = [dict(d) for d in spec.diagnostics]
        if args.conditions:
            for r in requests:
                r["conditions"] = _ids(args.conditions)
        if not requests:
            raise InputError(f"{spec.name} declares no diagnostics; pass --sequence")
    for r in requests:
        for c in r["conditions"]:
            if c not in CONDITION_NAMES:
                raise InputError(f"unknown condition id {c!r}; known: {', '.join(CONDITION_NAMES)}")

    records, rows = [], []
    inconclusive = False
    for r in requests:
        seq, kname = spec.sequence(r["sequence"])
        kernel = spec.kernel(kname)
        if not isinstance(kernel, JointKernel):
            raise InputError(f"kernel {kname!r} is not a joint kernel")
        reports = _diagnose_reports(spec, kernel, seq, r["conditions"], r.get("family"), args.eps, args.fail_floor)
        for cr in reports:
            for gr in cr.reports:
                stdout.write(
                    f"{cr.condition:<16} {gr.witness:<24} {gr.verdict.value:<12} terminal_gap={gr.gaps[-1]!r}\n"
                )
                rows.extend(gr.rows())
            stdout.write(f"{cr.condition:<16} {'(condition)':<24} {cr.verdict.value}\n")
            inconclusive |= cr.verdict is Verdict.INCONCLUSIVE or any(g.verdict is Verdict.INCONCLUSIVE for g in cr.reports)
            records.append({"kernel": kname, "sequence": r["sequence"], **cr.summary()})
    verdicts = {rec["verdict"] for rec in records}
    stdout.write(f"summary: {len(records)} condition(s); verdicts {', '.join(sorted(verdicts))}; "
                 "verdicts certify behaviour along the declared sequence only\n")
    if args.out_dir is not None:
        if args.format == "csv":
            _write(args.out_dir, "gaps.csv", _csv(rows), stdout)
        else:
            _write(args.out_dir, "report.json", json.dumps({"spec": spec.name, "reports": records}, indent=2) + "\n", stdout)
    return EXIT_INCONCLUSIVE if inconclusive else EXIT_OK


# ---------------------------------------------------------------------------
# equivalence


def _sizes(text: str) -> tuple[int, int]:
    try:
        k1, k2 = (int(x) for x in text.split(","))
    except ValueError:
        raise InputError(f"--sizes expects two integers like 3,3, got {text!r}") from None
    return k1, k2


def cmd_equivalence(args, stdout, stderr) -> int:
    sizes = _sizes(args.sizes)
    if sizes[1] > ORACLE_BUDGET:
        stderr.write(f"error: |S2| = {sizes[1]} exceeds the enumeration budget of {ORACLE_BUDGET}\n")
        return EXIT_INPUT
    if min(sizes) < 1 or (args.truth != "CONTINUOUS" and sizes == (1, 1)):
        raise InputError("sizes must be at least 1, and a jump needs |S1 x S2| >= 2")
    truths = [Truth.CONTINUOUS, Truth.DISCONTINUOUS] if args.truth == "both" else [Truth(args.truth)]
    total = agreed = 0
    rows = []
    for truth in truths:
        want = Verdict.PASS if truth is Truth.CONTINUOUS else Verdict.FAIL
        for seed in range(args.seeds):
            inst = generate_instance(seed, truth, sizes)
            suite = equivalence_suite(inst.kernel, inst.sequence(), args.eps, args.fail_floor)
            verdicts = suite.verdicts()
            ok = suite.agreement and all(v is want for v in verdicts.values())
            total += 1
            agreed += ok
            line = " ".join(f"{k}={v.value}" for k, v in verdicts.items())
            stdout.write(f"seed={seed} truth={truth.value} agree={ok} {line}\n")
            rows.append({"seed": seed, "truth": truth.value, "agree": ok, **{k: v.value for k, v in verdicts.items()}})
    if total == 0:
        stdout.write("summary: 0 instances\n")
        return EXIT_OK
    pct = 100.0 * agreed / total
    stdout.write(f"summary: {agreed}/{total} instances agree with ground truth ({pct:.1f}%)\n")
    if args.out_dir is not None:
        if args.format == "csv":
            _write(args.out_dir, "equivalence.csv", _csv(rows), stdout)
        else:
            _write(args.out_dir, "equivalence.json", json.dumps({"agreement": pct, "instances": rows}, indent=2) + "\n", stdout)
    return EXIT_OK if agreed == total else EXIT_DISAGREE


# ---------------------------------------------------------------------------
# export


def cmd_export(args, stdout, stderr) -> int:
    if args.spec:
        spec = load(args.spec)
        _write(args.out_dir, f"{spec.name}.json", dumps(export_document(spec)), stdout)
        return EXIT_OK
    sizes = _sizes(args.sizes)
    if sizes[1] > ORACLE_BUDGET:
        stderr.write(f"error: |S2| = {sizes[1]} exceeds the enumeration budget of {ORACLE_BUDGET}\n")
        return EXIT_INPUT
    truth = Truth(args.truth) if args.truth != "both" else Truth.CONTINUOUS
    for seed in range(args.seeds):
        doc = instance_document(generate_instance(seed, truth, sizes))
        _write(args.out_dir, f"{doc['name']}.json", dumps(doc), stdout)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fellerkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, spec_required=True):
        p.add_argument("--spec", required=spec_required, help="path to a JSON spec, or a built-in name")
        p.add_argument("--out-dir", help="write report files here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="csv")

    p = sub.add_parser("filter", help="run the belief filter on a model")
    common(p)
    p.add_argument("--prior", help="prior id declared in the spec")
    p.add_argument("--actions", default="", help="comma-separated action ids")
    p.add_argument("--observations", default="", help="comma-separated observation ids")
    p.add_argument("--y0", help="initial observation (models whose kernel reads it)")
    p.set_defaults(func=cmd_filter)

    def thresholds(p):
        p.add_argument("--eps", type=float, default=DEFAULT_EPS)
        p.add_argument("--fail-floor", type=float, default=DEFAULT_FAIL_FLOOR)

    p = sub.add_parser("diagnose", help="gap series and verdicts along a declared sequence")
    common(p)
    p.add_argument("--sequence", help="sequence id declared in the spec")
    p.add_argument("--conditions", help=f"comma-separated: {', '.join(CONDITION_NAMES)}")
    p.add_argument("--family", help="family id declared in the spec (SUF_A and ASSUMPTION_M witnesses)")
    thresholds(p)
    p.set_defaults(func=cmd_diagnose)

    def generator(p):
        p.add_argument("--seeds", type=int, default=100)
        p.add_argument("--sizes", default="3,3", help="|S1|,|S2|")
        p.add_argument("--truth", choices=("CONTINUOUS", "DISCONTINUOUS_AT_LIMIT", "both"), default="both")

    p = sub.add_parser("equivalence", help="equivalence suite over generated ground-truth instances")
    common(p, spec_required=False)
    generator(p)
    thresholds(p)
    p.set_defaults(func=cmd_equivalence)

    p = sub.add_parser("export", help="write a spec (or generated instances) as canonical JSON")
    common(p, spec_required=False)
    generator(p)
    p.set_defaults(func=cmd_export, seeds=1)
    return parser


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, stdout, stderr)
    except SpecError as exc:
        stderr.write(f"error: invalid spec: {exc}\n")
        return EXIT_INPUT
    except (InputError, DomainError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
