"""Command-line interface: ``fdns hash|compare|attack|bench|templates|classify``.

Exit codes: 0 success, 2 I/O, 3 incompatible hashes, 4 parse errors,
5 configuration errors.

Defaults for the ``--params-*`` flags, ``--seed`` and ``--threads`` may be
put in a ``key = value`` file named by the ``FDNS_CONFIG`` environment
variable; command-line flags win.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import fields
from pathlib import Path

from . import __version__, attacks, evaluation, fdns, imagecore, records
from .errors import AttackParseError, ConfigurationError, IncompatibleHashError
from .fdns import FdnsParams

EXIT_OK = 0
EXIT_IO = 2
EXIT_INCOMPATIBLE = 3
EXIT_PARSE = 4
EXIT_CONFIG = 5

CONFIG_ENV = "FDNS_CONFIG"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(f"{self.prog}: {message}", EXIT_PARSE)


def read_config(path) -> dict:
    """Parse a ``key = value`` config file; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}", EXIT_IO) from None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{n}: expected key = value", EXIT_PARSE)
        key, _, value = line.partition("=")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _params_from(args, config: dict) -> FdnsParams:
    kwargs = {}
    for f in fields(FdnsParams):
        value = getattr(args, f"params_{f.name}", None)
        if value is None and f.name in config:
            value = config[f.name]
        if value is None:
            continue
        try:
            kwargs[f.name] = float(value) if f.name == "gaussian_sigma" else int(value)
        except ValueError:
            raise CliError(f"bad value for {f.name}: {value!r}", EXIT_PARSE) from None
    try:
        return FdnsParams(**kwargs)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None


def _int_setting(args, config: dict, name: str, default):
    value = getattr(args, name, None)
    if value is None:
        value = config.get(name, default)
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        raise CliError(f"bad value for {name}: {value!r}", EXIT_PARSE) from None


def _load(path):
    try:
        return imagecore.load_image(path)
    except FileNotFoundError:
        raise CliError(f"no such file: {path}", EXIT_IO) from None
    except OSError as exc:
        raise CliError(f"cannot decode {path}: {exc}", EXIT_IO) from None


def _read_hash(path):
    try:
        return records.read_hash(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None
    except records.RecordFormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_IO) from None


def _write_text(path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


def cmd_hash(args, config) -> int:
    params = _params_from(args, config)
    h = fdns.hash_image(_load(args.input), params)
    text = records.dumps_hash(h, params)
    if args.output:
        _write_text(args.output, text)
    if args.print or not args.output:
        if args.output:
            print(f"fingerprint {h.params_fingerprint}")
            print(" ".join(records.format_float(v) for v in h.values))
        else:
            sys.stdout.write(text)
    return EXIT_OK


def cmd_compare(args, config) -> int:
    a, _ = _read_hash(args.a)
    b, _ = _read_hash(args.b)
    try:
        r = fdns.correlation(a, b)
    except IncompatibleHashError as exc:
        raise CliError(str(exc), EXIT_INCOMPATIBLE) from None
    print(f"{r:.6f}")
    return EXIT_OK


def cmd_attack(args, config) -> int:
    seed = _int_setting(args, config, "seed", None)
    try:
        spec = attacks.AttackSpec.parse(args.spec, default_seed=seed)
    except AttackParseError as exc:
        raise CliError(f"bad attack {args.spec!r}: {exc}", EXIT_PARSE) from None
    gray = imagecore.to_grayscale(_load(args.input))
    try:
        out = spec.apply(gray)
    except ValueError as exc:
        raise CliError(f"attack {spec}: {exc}", EXIT_CONFIG) from None
    try:
        imagecore.save_image(out, args.output)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot write {args.output}: {exc}", EXIT_IO) from None
    return EXIT_OK


def read_grid(path, default_seed=None) -> list:
    """One ``kind:parameter[:seed]`` per line; blank lines and ``#`` comments are skipped."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read grid {path}: {exc}", EXIT_IO) from None
    grid = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            grid.append(attacks.AttackSpec.parse(line, default_seed=default_seed))
        except AttackParseError as exc:
            raise CliError(f"{path}:{n}: {exc}", EXIT_PARSE) from None
    return grid


def _corpus_dir(path):
    if not Path(path).is_dir():
        raise CliError(f"no such directory: {path}", EXIT_IO)
    return path


def cmd_bench(args, config) -> int:
    params = _params_from(args, config)
    threads = _int_setting(args, config, "threads", None)
    seed = _int_setting(args, config, "seed", 0)
    grid = read_grid(args.grid, seed) if args.grid else list(attacks.DEFAULT_GRID)
    corpus = evaluation.list_images(_corpus_dir(args.corpus))
    if not corpus:
        raise CliError(f"corpus {args.corpus} contains no PNG/JPEG files", EXIT_CONFIG)
    report = evaluation.robustness_bench(corpus, grid, params, threads=threads, corpus_id=Path(args.corpus).name)
    _write_text(args.output, report.to_csv())
    if args.detail:
        _write_text(args.detail, report.to_text())
    for s in report.skipped:
        print(f"skipped {s.image_id} {s.spec or ''}: {s.reason}", file=sys.stderr)
    return EXIT_OK


def cmd_templates(args, config) -> int:
    params = _params_from(args, config)
    threads = _int_setting(args, config, "threads", None)
    seed = _int_setting(args, config, "seed", 0)
    corpus = evaluation.load_labeled_corpus(_corpus_dir(args.corpus))
    try:
        db = evaluation.build_template_db(corpus, args.per_class, seed, params, threads=threads)
    except ConfigurationError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    except OSError as exc:
        raise CliError(f"cannot decode template image: {exc}", EXIT_IO) from None
    try:
        text = records.dumps_templates(db)
    except records.RecordFormatError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    _write_text(args.output, text)
    for e in db.entries:
        print(f"{e.label}\t{e.source}")
    return EXIT_OK


def cmd_classify(args, config) -> int:
    threads = _int_setting(args, config, "threads", None)
    try:
        db = records.read_templates(args.db)
    except OSError as exc:
        raise CliError(f"cannot read {args.db}: {exc}", EXIT_IO) from None
    except records.RecordFormatError as exc:
        raise CliError(f"{args.db}: {exc}", EXIT_IO) from None
    params = db.params
    target = Path(args.input)

    if target.is_file():
        label, score = evaluation.classify(fdns.hash_image(_load(target), params), db, args.threshold)
        print(f"{target}\t{label or evaluation.REJECTED}\t{score:.6f}")
        return EXIT_OK
    if not target.is_dir():
        raise CliError(f"no such file or directory: {target}", EXIT_IO)

    items = evaluation.list_images(target)
    if args.eval:
        template_sources = {e.source for e in db.entries}
        labeled = [(ident.split("/")[0], ident, p) for ident, p in items if "/" in ident and ident not in template_sources]
        if not labeled:
            raise CliError(f"{target} holds no labeled images outside the templates", EXIT_CONFIG)
        items = [(ident, p) for _, ident, p in labeled]
    elif not items:
        raise CliError(f"{target} contains no PNG/JPEG files", EXIT_CONFIG)

    try:
        hashes = evaluation.hash_many([p for _, p in items], params, threads)
    except OSError as exc:
        raise CliError(f"cannot decode image: {exc}", EXIT_IO) from None
    confusion: dict = {}
    correct = 0
    for (ident, _), h in zip(items, hashes):
        label, score = evaluation.classify(h, db, args.threshold)
        label = label or evaluation.REJECTED
        print(f"{ident}\t{label}\t{score:.6f}")
        if args.eval:
            truth = ident.split("/")[0]
            confusion[(truth, label)] = confusion.get((truth, label), 0) + 1
            correct += truth == label
    if args.eval:
        print(f"accuracy {correct / len(items):.6f} ({correct}/{len(items)})")
        print(evaluation.confusion_table(confusion))
    return EXIT_OK


def _add_params_flags(p):
    for f in fields(FdnsParams):
        flag = "--params-" + f.name.replace("_", "-")
        kind = float if f.name == "gaussian_sigma" else int
        p.add_argument(flag, dest=f"params_{f.name}", type=kind, default=None, help=f"override {f.name} (default {f.default})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fdns", description="F-DNS perceptual image hashing.")
    parser.add_argument("--version", action="version", version=f"fdns {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("hash", help="hash an image file")
    p.add_argument("input")
    p.add_argument("-o", "--output", help="write the hash record here (default: stdout)")
    p.add_argument("--print", action="store_true", help="also print fingerprint and values")
    _add_params_flags(p)
    p.set_defaults(func=cmd_hash)

    p = sub.add_parser("compare", help="correlation between two hash records")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("attack", help="apply a content-preserving operation")
    p.add_argument("input")
    p.add_argument("spec", help="kind:parameter[:seed], e.g. rotation:5 or saltpepper:0.01:42")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--seed", type=int, default=None, help="seed for stochastic attacks without one")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("bench", help="robustness benchmark over a corpus directory")
    p.add_argument("corpus")
    p.add_argument("--grid", help="file with one attack spec per line (default: built-in grid)")
    p.add_argument("-o", "--output", required=True, help="CSV report path")
    p.add_argument("--detail", help="also write the per-image JSON report here")
    p.add_argument("--seed", type=int, default=None, help="seed for stochastic grid entries without one")
    p.add_argument("--threads", type=int, default=None)
    _add_params_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("templates", help="pick and hash templates from a labeled corpus")
    p.add_argument("corpus", help="directory with one subdirectory per label")
    p.add_argument("--per-class", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--threads", type=int, default=None)
    _add_params_flags(p)
    p.set_defaults(func=cmd_templates)

    p = sub.add_parser("classify", help="label images by their most correlated template")
    p.add_argument("input", help="image file or directory")
    p.add_argument("--db", required=True)
    p.add_argument("--eval", action="store_true", help="input directory is labeled; report accuracy")
    p.add_argument("--threshold", type=float, default=None, help="reject best scores below this")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_classify)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = read_config(os.environ[CONFIG_ENV]) if os.environ.get(CONFIG_ENV) else {}
        return args.func(args, config)
    except CliError as exc:
        print(f"fdns: {exc}", file=sys.stderr)
        return exc.code
    except IncompatibleHashError as exc:
        print(f"fdns: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except ConfigurationError as exc:
        print(f"fdns: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
