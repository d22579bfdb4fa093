"""Command-line driver: ``classdesc gen|inspect|insert-friend|fix-includes|pack|unpack``."""

import argparse
import json
import logging
import re
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .diagnostics import ERROR, WARNING, Diagnostic, has_errors
from .emitter import PlanError, emit_access_macros, emit_file, plan
from .model import Named, TypeRegistry, build_registry, registry_to_ir
from .parser import CLASS_DECL, parse_source
from .rewriter import fix_headers, insert_access_macros, read_text, write_text_atomic
from .runtime import MODES, NATIVE, PackBuffer, SerializationError, pack, unpack
from .valuefile import ValueFileError, dumps, loads

log = logging.getLogger("classdesc")

EXIT_OK, EXIT_DIAGNOSTICS, EXIT_USAGE = 0, 1, 2
ACCESS_HEADER = "classdesc_access.h"
DEFAULT_ACTIONS = ("pack", "unpack")
_ACTION_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


class _UsageError(Exception):
    pass


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _report(diags: Sequence[Diagnostic], stream=None) -> None:
    stream = stream or sys.stderr
    for d in diags:
        print(d.format(), file=stream)


def _load_headers(paths: Sequence[str], single_objects: Sequence[str] = ()):
    """Parse headers into one registry. Returns (registry, per-file decls, diagnostics)."""
    diags: List[Diagnostic] = []
    all_decls = []
    per_file: Dict[str, list] = {}
    for path in paths:
        try:
            text = read_text(Path(path))
        except OSError as exc:
            diags.append(Diagnostic(ERROR, f"cannot read: {exc.strerror or exc}", 1, 1, path))
            continue
        decls, d = parse_source(text, path)
        diags.extend(d)
        per_file[path] = decls
        all_decls.extend(decls)
    registry, d = build_registry(all_decls, single_objects)
    diags.extend(d)
    return registry, per_file, diags


def _cmd_gen(args) -> int:
    actions = args.action or list(DEFAULT_ACTIONS)
    for a in actions:
        if not _ACTION_RE.fullmatch(a):
            raise _UsageError(f"invalid action name {a!r}")
    actions = list(dict.fromkeys(actions))
    headers = sorted(dict.fromkeys(args.headers))
    registry, per_file, diags = _load_headers(headers, args.single_obj or ())
    outputs: Dict[str, str] = {}
    for header in headers:
        if header not in per_file:
            continue
        classes = [registry.classes[d.payload.name] for d in per_file[header]
                   if d.variant == CLASS_DECL and d.payload.name in registry.classes]
        stem = Path(header).stem
        for action in actions:
            plans = []
            for cls in classes:
                if registry.is_omitted(cls.name, action):
                    continue
                try:
                    p = plan(cls, registry, action)
                except PlanError as exc:
                    diags.append(Diagnostic(ERROR, str(exc), cls.line, cls.column, header))
                    continue
                if action == actions[0]:
                    diags.extend(Diagnostic(WARNING, w, cls.line, cls.column, header) for w in p.warnings)
                plans.append(p)
            name = f"{stem}.{action}.cd"
            if name in outputs:
                diags.append(Diagnostic(ERROR, f"output {name} would be written twice", 1, 1, header))
            outputs[name] = emit_file(plans, action)
    outputs[ACCESS_HEADER] = (
        "#ifndef CLASSDESC_ACCESS_H\n#define CLASSDESC_ACCESS_H\n\n"
        + emit_access_macros(actions)
        + "\n#endif\n"
    )
    _report(diags)
    if has_errors(diags):
        return EXIT_DIAGNOSTICS
    out_dir = Path(args.output)
    for name in sorted(outputs):
        write_text_atomic(out_dir / name, outputs[name])
        log.info("wrote %s", out_dir / name)
    return EXIT_OK


def _tree(registry: TypeRegistry) -> str:
    lines = []
    ir = registry_to_ir(registry)

    def texpr(t) -> str:
        v = t["variant"]
        if v == "primitive":
            return t["kind"]
        if v == "named":
            return t["name"]
        if v == "array":
            return f"{texpr(t['element'])}[{t['extent']}]"
        pointee = "?" if t["pointee"] is None else texpr(t["pointee"])
        if t["member_of"]:
            return f"{pointee} {t['member_of']}::*"
        return f"{pointee}*" + (" (function)" if t["function"] else "")

    for c in ir["classes"]:
        head = f"{c['kind']} {c['name']}"
        if c["template_params"]:
            head += f" <{', '.join(c['template_param_decls'] or c['template_params'])}>"
        lines.append(head)
        for b in c["bases"]:
            lines.append(f"  base {b['access']}{' virtual' if b['virtual'] else ''} {b['name']}")
        for m in c["members"]:
            flags = []
            if m["is_function"]:
                flags.append(f"function {m['function_signature_class']}")
            elif not m["serializable"]:
                flags.append("not serializable")
            extra = f"  [{', '.join(flags)}]" if flags else ""
            lines.append(f"  {m['access']} {m['name']}: {texpr(m['type'])}{extra}")
    for name, t in ir["typedefs"].items():
        lines.append(f"typedef {name} = {texpr(t)}")
    for action, name in ir["omit_set"]:
        lines.append(f"omit {action} {name}")
    for name in ir["single_object_set"]:
        lines.append(f"single_obj_ptr {name}")
    return "\n".join(lines) + ("\n" if lines else "")


def _cmd_inspect(args) -> int:
    registry, _, diags = _load_headers(args.headers, args.single_obj or ())
    _report(diags)
    if args.format == "json":
        print(json.dumps(registry_to_ir(registry), indent=2))
    else:
        sys.stdout.write(_tree(registry))
    return EXIT_DIAGNOSTICS if has_errors(diags) else EXIT_OK


def _cmd_insert_friend(args) -> int:
    if args.output and len(args.files) != 1:
        raise _UsageError("-o needs exactly one input file")
    status = EXIT_OK
    for path in args.files:
        try:
            text = read_text(Path(path))
        except OSError as exc:
            _report([Diagnostic(ERROR, f"cannot read: {exc.strerror or exc}", 1, 1, path)])
            status = EXIT_DIAGNOSTICS
            continue
        result = insert_access_macros(text)
        _report([Diagnostic(d.severity, d.message, d.line, d.column, path) for d in result.diagnostics])
        if has_errors(result.diagnostics):
            status = EXIT_DIAGNOSTICS
            continue
        target = Path(args.output) if args.output else Path(path)
        if result.changed or args.output:
            write_text_atomic(target, result.output)
        for e in result.edits:
            log.info("%s:%d: inserted %s", path, e.line, e.text.strip())
    return status


def _cmd_fix_includes(args) -> int:
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        raise _UsageError(f"{corpus} is not a directory")
    summary = fix_headers(corpus, args.output)
    for w in summary.warnings:
        print(w, file=sys.stderr)
    print(f"scanned {summary.scanned}, patched {summary.patched}")
    return EXIT_OK


def _runtime_setup(args):
    registry, _, diags = _load_headers([args.header], args.single_obj or ())
    _report(diags)
    if has_errors(diags):
        return None, None
    cls = registry.classes.get(args.class_name)
    if cls is None:
        _report([Diagnostic(ERROR, f"no class named {args.class_name}", 1, 1, args.header)])
        return None, None
    return registry, Named(cls.name)


def _cmd_pack(args) -> int:
    registry, t = _runtime_setup(args)
    if registry is None:
        return EXIT_DIAGNOSTICS
    try:
        value = loads(read_text(Path(args.values)), t, registry)
        buf = pack(PackBuffer(args.mode), "", value, t, registry)
    except (OSError, ValueFileError, SerializationError) as exc:
        print(f"{args.values}: error: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    for w in buf.warnings:
        print(f"{args.values}: warning: {w}", file=sys.stderr)
    out = Path(args.output)
    tmp = out.with_name(f".{out.name}.tmp")
    tmp.write_bytes(bytes(buf))
    tmp.replace(out)
    return EXIT_OK


def _cmd_unpack(args) -> int:
    registry, t = _runtime_setup(args)
    if registry is None:
        return EXIT_DIAGNOSTICS
    try:
        buf = PackBuffer(args.mode, Path(args.blob).read_bytes())
        value = unpack(buf, "", t, registry)
        if buf.remaining():
            raise SerializationError(f"{buf.remaining()} trailing bytes after {args.class_name}")
        text = dumps(value, t, registry)
    except (OSError, ValueFileError, SerializationError) as exc:
        print(f"{args.blob}: error: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    if args.output:
        write_text_atomic(Path(args.output), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgParser(prog="classdesc", description="Object descriptor generator and serialization oracle.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_ArgParser)
    sub.required = True

    def single_obj(p):
        p.add_argument("--single-obj", action="append", metavar="NAME",
                       help="treat pointers to NAME as null-or-one-object pointers")

    p = sub.add_parser("gen", help="emit descriptor files for headers")
    p.add_argument("headers", nargs="+")
    p.add_argument("--action", action="append", help="descriptor action (repeatable; default pack, unpack)")
    p.add_argument("-o", "--output", default=".", help="output directory")
    single_obj(p)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("inspect", help="print the parsed type registry")
    p.add_argument("headers", nargs="+")
    p.add_argument("--format", choices=("json", "tree"), default="json")
    single_obj(p)
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("insert-friend", help="insert CLASSDESC_ACCESS macro calls")
    p.add_argument("files", nargs="+")
    p.add_argument("-o", "--output", help="write here instead of rewriting in place")
    p.set_defaults(func=_cmd_insert_friend)

    p = sub.add_parser("fix-includes", help="write patched copies of a header tree")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_fix_includes)

    p = sub.add_parser("pack", help="pack a values file into a blob")
    p.add_argument("header")
    p.add_argument("class_name", metavar="class")
    p.add_argument("values")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--mode", choices=MODES, default=NATIVE)
    single_obj(p)
    p.set_defaults(func=_cmd_pack)

    p = sub.add_parser("unpack", help="unpack a blob into a values file")
    p.add_argument("header")
    p.add_argument("class_name", metavar="class")
    p.add_argument("blob")
    p.add_argument("-o", "--output")
    p.add_argument("--mode", choices=MODES, default=NATIVE)
    single_obj(p)
    p.set_defaults(func=_cmd_unpack)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one CLI invocation; returns 0, 1 (diagnostics with errors) or 2 (usage)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(message)s",
            stream=sys.stderr,
        )
        return args.func(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE


def main() -> None:
    sys.exit(run())
