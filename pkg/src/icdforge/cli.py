"""Command-line entry point.

Exit codes: 0 success, 1 findings or verification failure, 2 usage or input
error.  All commands are deterministic and never mutate their inputs.
"""

from __future__ import annotations

import argparse
import shutil
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .codec import (
    Bitstream,
    CodecError,
    LengthMismatch,
    decode_frame,
    encode_frame,
    format_value_map,
    golden_vectors,
    parse_value_map,
    write_golden_file,
)
from .codegen import (
    RenderError,
    TemplateParseError,
    TemplateRenderError,
    builtin_template_dir,
    list_builtin_sets,
    load_template_set,
    render,
    trace_report,
)
from .diffbase import baseline_digest, diff_documents, diff_report
from .model import ICDDocument, ModelError, UnknownDevice, find_frame
from .skeleton import (
    DeviceIdMismatch,
    check_io_consistency,
    gen_skeleton,
    read_skeleton_file,
    write_skeleton_file,
)
from .validate import (
    ValidatorConfig,
    has_errors,
    report_machine,
    report_text,
    validate,
)
from .xmlio import parse_icd, render_review, serialize_icd

OK = 0
FAIL = 1
USAGE = 2


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return USAGE


def _load_document(path: str) -> Optional[ICDDocument]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return None
    result = parse_icd(data)
    for issue in result.issues:
        print(str(issue), file=sys.stderr)
    return result.document


def _write_or_print(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")


def _validator_config(args: argparse.Namespace) -> ValidatorConfig:
    return ValidatorConfig(direction_rule=getattr(args, "direction_check", "off"))


def _gate_clean(doc: ICDDocument, config: ValidatorConfig) -> bool:
    """Print findings; True when no error-severity finding blocks generation."""
    findings = validate(doc, config)
    if findings:
        sys.stderr.write(report_text(findings))
    return not has_errors(findings)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_validate(args: argparse.Namespace) -> int:
    doc = _load_document(args.icd)
    if doc is None:
        return USAGE
    findings = validate(doc, _validator_config(args))
    sys.stdout.write(report_machine(findings) if args.format == "machine" else report_text(findings))
    return FAIL if has_errors(findings) else OK


def cmd_gen_tl(args: argparse.Namespace) -> int:
    doc = _load_document(args.icd)
    if doc is None:
        return USAGE
    try:
        template_set = load_template_set(args.templates)
    except RenderError as exc:
        return _fail(str(exc))
    if not _gate_clean(doc, _validator_config(args)):
        print("error: document has validator errors; generation refused", file=sys.stderr)
        return FAIL
    try:
        report = render(doc, template_set, args.out_dir)
    except (TemplateParseError, TemplateRenderError, RenderError) as exc:
        return _fail(str(exc))
    coverage = trace_report(report, doc)
    for rel in report.files:
        print(f"wrote {rel}")
    sys.stdout.write(coverage.text())
    return OK if coverage.ok else FAIL


def cmd_gen_skeleton(args: argparse.Namespace) -> int:
    doc = _load_document(args.icd)
    if doc is None:
        return USAGE
    if not _gate_clean(doc, _validator_config(args)):
        print("error: document has validator errors; generation refused", file=sys.stderr)
        return FAIL
    try:
        skeleton = gen_skeleton(doc, args.device)
    except UnknownDevice as exc:
        return _fail(str(exc))
    except ModelError as exc:
        return _fail(str(exc))
    _write_or_print(write_skeleton_file(skeleton), args.out)
    return OK


def cmd_check_io(args: argparse.Namespace) -> int:
    try:
        expected = read_skeleton_file(Path(args.expected).read_text(encoding="utf-8"))
        actual = read_skeleton_file(Path(args.actual).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    try:
        findings = check_io_consistency(expected, actual)
    except DeviceIdMismatch as exc:
        return _fail(str(exc))
    sys.stdout.write(report_text(findings))
    return FAIL if findings else OK


def cmd_oracle(args: argparse.Namespace) -> int:
    doc = _load_document(args.icd)
    if doc is None:
        return USAGE
    if not _gate_clean(doc, _validator_config(args)):
        print("error: document has validator errors; oracle refused", file=sys.stderr)
        return FAIL
    try:
        _, frame = find_frame(doc, args.device, args.frame)
    except ModelError as exc:
        return _fail(str(exc))

    if args.mode == "encode":
        text = args.values
        if args.values_file is not None:
            text = Path(args.values_file).read_text(encoding="utf-8").strip()
        if text is None:
            return _fail("encode needs --values or --values-file")
        try:
            values = parse_value_map(text)
            bits = encode_frame(doc, args.device, args.frame, values)
        except (ValueError, CodecError, ModelError) as exc:
            return _fail(str(exc))
        print(bits.hex())
        return OK

    if args.mode == "decode":
        try:
            bits = Bitstream.from_hex(frame.size_bits, args.hex)
        except ValueError as exc:
            return _fail(str(exc))
        try:
            values = decode_frame(doc, args.device, args.frame, bits)
        except LengthMismatch as exc:
            return _fail(str(exc))
        except CodecError as exc:
            print(f"decode failed: {exc}", file=sys.stderr)
            return FAIL
        print(format_value_map(values))
        return OK

    # vectors
    if args.n < 0:
        return _fail("--n must be >= 0")
    try:
        vectors = golden_vectors(doc, args.device, args.frame, args.n, args.seed)
    except (CodecError, ModelError) as exc:
        return _fail(str(exc))
    _write_or_print(write_golden_file(args.device, frame, args.seed, vectors), args.out)
    return OK


def cmd_diff(args: argparse.Namespace) -> int:
    doc_a = _load_document(args.icd_a)
    doc_b = _load_document(args.icd_b)
    if doc_a is None or doc_b is None:
        return USAGE
    entries = diff_documents(doc_a, doc_b)
    sys.stdout.write(diff_report(entries))
    return FAIL if entries else OK


def cmd_baseline(args: argparse.Namespace) -> int:
    doc = _load_document(args.icd)
    if doc is None:
        return USAGE
    print(baseline_digest(doc))
    return OK


def cmd_render_review(args: argparse.Namespace) -> int:
    doc = _load_document(args.icd)
    if doc is None:
        return USAGE
    _write_or_print(render_review(doc), args.out)
    return OK


def cmd_canonicalize(args: argparse.Namespace) -> int:
    doc = _load_document(args.icd)
    if doc is None:
        return USAGE
    data = serialize_icd(doc)
    if args.out is None or args.out == "-":
        sys.stdout.buffer.write(data)
    else:
        Path(args.out).write_bytes(data)
    return OK


def cmd_templates(args: argparse.Namespace) -> int:
    if args.templates_mode == "list":
        for name in list_builtin_sets():
            print(name)
        return OK
    source = builtin_template_dir(args.name)
    if not (source / "manifest.json").is_file():
        return _fail(f"no built-in template set named {args.name!r}")
    target = Path(args.out_dir)
    if target.exists() and any(target.iterdir()):
        return _fail(f"target directory {args.out_dir!r} is not empty")
    target.mkdir(parents=True, exist_ok=True)
    for entry in sorted(source.iterdir()):
        if entry.is_file():
            shutil.copyfile(entry, target / entry.name)
            print(f"wrote {target / entry.name}")
    return OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icdforge",
        description="Validate XML interface control documents, compute frame "
        "bitstreams, and generate transport-layer code with traceability.",
    )
    parser.add_argument("--version", action="version", version=f"icdforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_direction_flag(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--direction-check",
            choices=("off", "warning", "error"),
            default="off",
            help="enable the V6 direction-coherence rule at the given severity",
        )

    p = sub.add_parser("validate", help="run the integrity rule catalogue")
    p.add_argument("icd")
    p.add_argument("--format", choices=("text", "machine"), default="text")
    add_direction_flag(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gen-tl", help="render a template set over the document")
    p.add_argument("icd")
    p.add_argument("templates", help="template set directory or built-in name (e.g. c99)")
    p.add_argument("out_dir")
    add_direction_flag(p)
    p.set_defaults(func=cmd_gen_tl)

    p = sub.add_parser("gen-skeleton", help="emit the I/O interface skeleton of a device")
    p.add_argument("icd")
    p.add_argument("device")
    p.add_argument("out", nargs="?", default=None)
    add_direction_flag(p)
    p.set_defaults(func=cmd_gen_skeleton)

    p = sub.add_parser("check-io", help="compare two interface skeleton files")
    p.add_argument("expected")
    p.add_argument("actual")
    p.set_defaults(func=cmd_check_io)

    p = sub.add_parser("oracle", help="authoritative frame bitstream oracle")
    p.add_argument("icd")
    p.add_argument("device")
    p.add_argument("frame")
    add_direction_flag(p)
    oracle_sub = p.add_subparsers(dest="mode", required=True)
    pe = oracle_sub.add_parser("encode", help="value map -> hex bitstream")
    pe.add_argument("--values", default=None, help="semicolon-separated path=value pairs")
    pe.add_argument("--values-file", default=None)
    pd = oracle_sub.add_parser("decode", help="hex bitstream -> value map")
    pd.add_argument("--hex", required=True)
    pv = oracle_sub.add_parser("vectors", help="emit deterministic golden vectors")
    pv.add_argument("--n", type=int, required=True)
    pv.add_argument("--seed", type=int, required=True)
    pv.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("diff", help="element-level change report between two documents")
    p.add_argument("icd_a")
    p.add_argument("icd_b")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("baseline", help="content digest of the canonical serialization")
    p.add_argument("icd")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("render-review", help="human-readable review report")
    p.add_argument("icd")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_render_review)

    p = sub.add_parser("canonicalize", help="emit the canonical serialization")
    p.add_argument("icd")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_canonicalize)

    p = sub.add_parser("templates", help="built-in template sets")
    tmpl_sub = p.add_subparsers(dest="templates_mode", required=True)
    tmpl_sub.add_parser("list", help="list built-in template set names")
    pe = tmpl_sub.add_parser("export", help="copy a built-in set into a directory")
    pe.add_argument("name")
    pe.add_argument("out_dir")
    p.set_defaults(func=cmd_templates)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
