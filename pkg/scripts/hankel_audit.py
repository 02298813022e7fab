"""
Command-line front end for the Hankel determinant audit.

    python scripts/hankel_audit.py derive --class r
    python scripts/hankel_audit.py audit --class r1
    python scripts/hankel_audit.py maximize --poly g1 --region unit-square --tol 1e-8
    python scripts/hankel_audit.py reproduce --class r --format json
    python scripts/hankel_audit.py lemmas --samples 100000 --seed 42 --save out/
    python scripts/hankel_audit.py explore --class r1 --samples 1000 --seed 7

Exit codes: 0 everything verified, 1 a verification item failed,
2 branch-and-bound budget exhausted (outputs still sound), 3 invalid input.
"""
import argparse
import json
import logging
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional, TextIO

import pandas as pd

# Add scripts directory to path to import sibling modules
sys.path.insert(0, str(Path(__file__).parent))
from hankel_data_model import (
    AuditFailureError, AuditItem, AuditKind, AuditStatus, BudgetExhaustedError, ClassId,
    HankelAuditError, InvalidInputError, MaxCertificate, ReportEnvelope, format_fraction,
)
from bounded_turning import (
    derive_coefficients, hankel2_poly, hankel3_poly, verify_printed_coefficients,
)
from branch_and_bound import (
    DEFAULT_BUDGET, DEFAULT_TOL, EDGES, REGIONS, bb_maximize, configured_threads, edge_table,
    named_polynomial, region_spec, registered_names,
)
from schwarz_functions import SamplerConfig, coefficients_frame, sample_coefficients
from theorem_pipeline import (
    DEFAULT_SAMPLES, DEFAULT_SEED, audit_exact_identities, random_search, reproduce_theorem,
    sample_log, verify_lemmas,
)


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_BUDGET = 2
EXIT_INVALID = 3

FORMATS = ('json', 'csv', 'text')
SAMPLES_PARQUET = "schwarz_samples.parquet"
SAMPLES_CSV = "schwarz_samples.csv"
RULE = "=" * 70


@dataclass(frozen=True)
class Command:
    """One validated command line."""
    subcommand: str
    class_id: Optional[ClassId] = None
    tol: float = DEFAULT_TOL
    seed: int = DEFAULT_SEED
    samples: int = DEFAULT_SAMPLES
    budget: int = DEFAULT_BUDGET
    format: str = 'text'
    poly: Optional[str] = None
    region: Optional[str] = None
    edges: bool = False
    save: Optional[Path] = None
    verbose: bool = False

    def to_dict(self) -> dict:
        return {
            'subcommand': self.subcommand,
            'class': self.class_id.value if self.class_id else None,
            'tol': self.tol,
            'seed': self.seed,
            'samples': self.samples,
            'budget': self.budget,
            'format': self.format,
            'poly': self.poly,
            'region': self.region,
            'edges': self.edges,
            'save': str(self.save) if self.save else None,
        }


@dataclass
class Outcome:
    payload: dict
    text: List[str]
    exit_code: int = EXIT_OK
    table: Optional[pd.DataFrame] = None


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the invalid-input code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


# ============================================================================
# Argument parsing
# ============================================================================

def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise ValueError(f"must be > 0, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise ValueError(f"must be >= 1, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-f', '--format', choices=FORMATS, default='text',
                        help='Output format (default: text)')
    common.add_argument('-v', '--verbose', action='store_true',
                        help='Log diagnostics at DEBUG level to stderr')

    class_arg = argparse.ArgumentParser(add_help=False)
    class_arg.add_argument('-c', '--class', dest='class_id', type=ClassId.parse, required=True,
                           metavar='{r,r1}', help='Bounded-turning class')

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument('--tol', type=_positive_float, default=DEFAULT_TOL,
                        help=f'Branch-and-bound tolerance (default: {DEFAULT_TOL})')
    search.add_argument('--budget', type=_positive_int, default=DEFAULT_BUDGET,
                        help=f'Maximum boxes per search (default: {DEFAULT_BUDGET})')

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument('-n', '--samples', type=_positive_int, default=DEFAULT_SAMPLES,
                          help=f'Number of sampled Schwarz functions (default: {DEFAULT_SAMPLES})')
    sampling.add_argument('-s', '--seed', type=int, default=DEFAULT_SEED,
                          help=f'Random seed (default: {DEFAULT_SEED})')
    sampling.add_argument('--save', type=Path, default=None, metavar='DIR',
                          help=f'Write the sample log to DIR/{SAMPLES_PARQUET} and DIR/{SAMPLES_CSV}')

    parser = _Parser(description='Audit the third Hankel determinant bounds for the classes R and R1')
    subparsers = parser.add_subparsers(dest='subcommand', required=True, parser_class=_Parser)
    subparsers.add_parser('derive', parents=[common, class_arg],
                          help='Derive a2..a5 and the Hankel polynomials')
    subparsers.add_parser('audit', parents=[common, class_arg],
                          help='Re-derive every printed algebraic identity')
    maximize = subparsers.add_parser('maximize', parents=[common, search],
                                     help='Certified maximum of a registered polynomial')
    maximize.add_argument('-p', '--poly', required=True, choices=registered_names(),
                          help='Registered polynomial name')
    maximize.add_argument('-r', '--region', default='unit-square', choices=list(REGIONS),
                          help='Registered region name (default: unit-square)')
    maximize.add_argument('--edges', action='store_true',
                          help=f'Also maximise along the edges {", ".join(EDGES)}')
    subparsers.add_parser('reproduce', parents=[common, class_arg, search],
                          help='Reproduce the bound for one class end to end')
    subparsers.add_parser('lemmas', parents=[common, sampling],
                          help='Falsification run of the coefficient lemmas')
    subparsers.add_parser('explore', parents=[common, class_arg, sampling],
                          help='Random search for large |H3(1)|')
    return parser


def parse_args(argv: Optional[List[str]] = None) -> Command:
    """Parse and validate a command line; usage errors exit with code 3."""
    args = build_parser().parse_args(argv)
    return Command(
        subcommand=args.subcommand,
        class_id=getattr(args, 'class_id', None),
        tol=getattr(args, 'tol', DEFAULT_TOL),
        seed=getattr(args, 'seed', DEFAULT_SEED),
        samples=getattr(args, 'samples', DEFAULT_SAMPLES),
        budget=getattr(args, 'budget', DEFAULT_BUDGET),
        format=args.format,
        poly=getattr(args, 'poly', None),
        region=getattr(args, 'region', None),
        edges=getattr(args, 'edges', False),
        save=getattr(args, 'save', None),
        verbose=args.verbose,
    )


# ============================================================================
# Subcommands
# ============================================================================

def _audit_lines(items: List[AuditItem]) -> List[str]:
    lines = [f"{'Status':<7} {'Kind':<15} {'Item':<46}", "-" * 70]
    for item in items:
        lines.append(f"{item.status.value:<7} {item.kind.value:<15} {item.name[:46]:<46}")
        if item.status is not AuditStatus.PASS:
            lines.append(f"        {item.detail}")
    return lines


def _audit_exit(items: List[AuditItem]) -> int:
    return EXIT_OK if all(item.passed for item in items) else EXIT_FAILED


def _certificate_lines(certificate: MaxCertificate) -> List[str]:
    return [
        f"Polynomial:       {certificate.polynomial}",
        f"Region:           {certificate.region}",
        f"Certified upper:  {certificate.upper:.12g}",
        f"Witness value:    {certificate.lower:.12g} at ({certificate.witness[0]:.10g}, "
        f"{certificate.witness[1]:.10g})",
        f"Gap / tol:        {certificate.gap:.3g} / {certificate.tol:.3g}",
        f"Boxes:            {certificate.boxes_processed} of {certificate.budget}",
        f"Complete:         {certificate.complete}",
    ]


def run_derive(cmd: Command) -> Outcome:
    formulas = derive_coefficients(cmd.class_id)
    matches = verify_printed_coefficients(cmd.class_id)
    h3 = hankel3_poly(formulas)
    h2 = hankel2_poly(formulas)
    payload = {
        'class': cmd.class_id.value,
        'coefficients': formulas.to_dict()['coefficients'],
        'printed_match': {f'a{n}': ok for n, ok in matches.items()},
        'h3': h3.to_dict(),
        'h2': h2.to_dict(),
    }
    text = [f"COEFFICIENTS OF {cmd.class_id.label}", "-" * 70]
    for n in range(2, formulas.order + 1):
        mark = "matches printed" if matches.get(n) else "DIFFERS from printed"
        text.append(f"a{n} = {formulas.coefficient(n)}    [{mark}]")
    text += ["-" * 70,
             f"H3(1) = {format_fraction(h3.scale)} * ({h3.poly})",
             f"H2(2) = {format_fraction(h2.scale)} * ({h2.poly})"]
    return Outcome(payload, text, EXIT_OK if all(matches.values()) else EXIT_FAILED)


def run_audit(cmd: Command) -> Outcome:
    items = audit_exact_identities(cmd.class_id)
    payload = {'class': cmd.class_id.value, 'items': [item.to_dict() for item in items]}
    text = [f"EXACT IDENTITIES FOR {cmd.class_id.label}"] + _audit_lines(items)
    return Outcome(payload, text, _audit_exit(items))


def run_maximize(cmd: Command) -> Outcome:
    poly = named_polynomial(cmd.poly)
    certificate = bb_maximize(poly, region_spec(cmd.region), cmd.tol, cmd.budget)
    payload = {'certificate': certificate.to_dict()}
    text = [f"MAXIMUM OF {poly.name.upper()}"] + _certificate_lines(certificate)
    table = None
    exit_code = EXIT_OK if certificate.complete else EXIT_BUDGET
    if cmd.edges:
        table = edge_table(poly, EDGES, cmd.tol, cmd.budget)
        payload['edges'] = json.loads(table.to_json(orient='records'))
        text += ["-" * 70, f"{'Edge':<8} {'Upper':>18} {'Witness x':>14} {'Witness y':>14}"]
        for row in table.itertuples():
            text.append(f"{row.edge:<8} {row.upper:>18.12g} {row.witness_x:>14.8g} {row.witness_y:>14.8g}")
        if not table['complete'].all():
            exit_code = EXIT_BUDGET
    return Outcome(payload, text, exit_code, table)


def run_reproduce(cmd: Command) -> Outcome:
    report = reproduce_theorem(cmd.class_id, cmd.tol, cmd.budget)
    payload = report.to_dict()
    failed = [item for item in report.audit if not item.passed]
    discrepancies = [item for item in report.audit if item.kind is AuditKind.DISCREPANCY]
    text = [
        f"THIRD HANKEL DETERMINANT BOUND FOR {cmd.class_id.label}",
        "-" * 70,
        f"{'Case 1 (exact)':<32} {format_fraction(report.case1_bound):>18} = {float(report.case1_bound):.6f}",
        f"{'Case 2 (certified)':<32} {'':>18}   {report.case2_bound:.6f}",
        f"{'Case 2 (self-consistent)':<32} {'':>18}   {report.case2_self_consistent:.6f}",
        f"{'Final bound':<32} {report.final_printed_form:>18} = {float(report.final):.6f}",
        f"{'Prior bound':<32} {'':>18}   {report.prior_bound:.5f}",
        f"{'Sharp |H2(2)| for R':<32} {format_fraction(report.sharp_h2):>18} = {float(report.sharp_h2):.6f}",
        "-" * 70,
        f"Audit items: {len(report.audit)}, failed: {len(failed)}, discrepancies: {len(discrepancies)}",
    ]
    for item in failed + discrepancies:
        text.append(f"  [{item.status.value}] {item.name}: {item.detail}")
    return Outcome(payload, text, EXIT_OK if report.passed else EXIT_FAILED)


def save_sample_log(df: pd.DataFrame, directory: Path) -> List[Path]:
    """Write the sample log as Parquet (pyarrow) and CSV."""
    directory.mkdir(parents=True, exist_ok=True)
    parquet_path = directory / SAMPLES_PARQUET
    csv_path = directory / SAMPLES_CSV
    df.to_parquet(parquet_path, engine='pyarrow', index=False)
    df.to_csv(csv_path, index=False)
    logger.info("Saved %d samples to %s and %s", len(df), parquet_path, csv_path)
    return [parquet_path, csv_path]


def run_lemmas(cmd: Command) -> Outcome:
    items = verify_lemmas(cmd.samples, cmd.seed)
    payload = {'samples': cmd.samples, 'seed': cmd.seed,
               'items': [item.to_dict() for item in items]}
    text = [f"COEFFICIENT LEMMAS ({cmd.samples} samples, seed {cmd.seed})"] + _audit_lines(items)
    for item in items:
        text.append(f"  {item.name}: {item.detail}")
    table = None
    if cmd.save is not None or cmd.format == 'csv':
        c, provenance = sample_coefficients(cmd.seed, SamplerConfig(count=cmd.samples))
        table = coefficients_frame(c, provenance, cmd.seed)
        if cmd.save is not None:
            payload['saved'] = [str(p) for p in save_sample_log(table, cmd.save)]
    return Outcome(payload, text, _audit_exit(items), table)


def run_explore(cmd: Command) -> Outcome:
    summary = random_search(cmd.class_id, cmd.samples, cmd.seed, workers=configured_threads())
    payload = summary.to_dict()
    text = [
        f"RANDOM SEARCH FOR {cmd.class_id.label} ({cmd.samples} samples, seed {cmd.seed})",
        "-" * 70,
        f"{'Best |H3(1)|':<28} {summary.best_value:.10f}  ({summary.best_sample.provenance})",
        f"{'Theorem bound':<28} {float(summary.bound):.10f}  ({format_fraction(summary.bound)})",
        f"{'Violations':<28} {summary.violations}",
        f"{'Triangle chain violations':<28} {summary.triangle_chain_violations}",
        f"{'Cases (1 / 2 / outside)':<28} {summary.case_counts['case1']} / "
        f"{summary.case_counts['case2']} / {summary.case_counts['outside']}",
    ]
    if summary.h2_best is not None:
        text.append(f"{'Best |H2(2)|':<28} {summary.h2_best:.10f}  (violations {summary.h2_violations})")
    text.append("-" * 70)
    for name, value in summary.witness_values.items():
        text.append(f"{'witness ' + name:<28} {value:.10f}")

    table = None
    if cmd.save is not None or cmd.format == 'csv':
        table = sample_log(cmd.class_id, cmd.samples, cmd.seed)
        if cmd.save is not None:
            payload['saved'] = [str(p) for p in save_sample_log(table, cmd.save)]
    ok = (summary.violations == 0 and summary.triangle_chain_violations == 0
          and summary.case_counts['outside'] == 0 and not summary.h2_violations)
    return Outcome(payload, text, EXIT_OK if ok else EXIT_FAILED, table)


HANDLERS = {
    'derive': run_derive,
    'audit': run_audit,
    'maximize': run_maximize,
    'reproduce': run_reproduce,
    'lemmas': run_lemmas,
    'explore': run_explore,
}


# ============================================================================
# Output
# ============================================================================

def _emit(cmd: Command, outcome: Outcome, out: TextIO):
    if cmd.format == 'json':
        envelope = ReportEnvelope(
            command=cmd.to_dict(),
            timestamp=datetime.now(timezone.utc).isoformat(),
            payload=outcome.payload,
        )
        print(envelope.to_json(), file=out)
    elif cmd.format == 'csv':
        outcome.table.to_csv(out, index=False)
    else:
        print(RULE, file=out)
        for line in outcome.text:
            print(line, file=out)
        print(RULE, file=out)


def run(cmd: Command, out: Optional[TextIO] = None) -> int:
    """Execute a command, write its report to out (stdout) and return the exit code."""
    out = sys.stdout if out is None else out
    try:
        if cmd.format == 'csv' and not (cmd.subcommand in ('lemmas', 'explore')
                                        or (cmd.subcommand == 'maximize' and cmd.edges)):
            raise InvalidInputError(
                "CSV output is available for lemmas, explore and maximize --edges only"
            )
        outcome = HANDLERS[cmd.subcommand](cmd)
    except BudgetExhaustedError as e:
        print(f"Budget exhausted: {e}", file=sys.stderr)
        if cmd.format == 'json':
            _emit(cmd, Outcome({'error': str(e), 'certificate': e.certificate.to_dict()}, []), out)
        return EXIT_BUDGET
    except AuditFailureError as e:
        print(f"Verification failed: {e}", file=sys.stderr)
        if cmd.format == 'json':
            _emit(cmd, Outcome({'error': str(e), 'item': e.item.to_dict()}, []), out)
        return EXIT_FAILED
    except InvalidInputError as e:
        print(f"Invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID
    except HankelAuditError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILED

    _emit(cmd, outcome, out)
    return outcome.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    cmd = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if cmd.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return run(cmd)


if __name__ == "__main__":
    sys.exit(main())
