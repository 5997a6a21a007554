"""Regenerates metrics_oracle.json from the snippets in metrics_corpus/.

Reference implementations: the stdlib tokenizer for token streams, LOC and
operator sets, radon 6.0.1 for McCabe complexity, and the stdlib ast for
block nesting. Run with Python 3.10:

    python3 metrics_oracle.py > metrics_oracle.json
"""

import ast
import io
import json
import keyword
import pathlib
import sys
import tokenize

from radon.visitors import ComplexityVisitor

SKIP = {tokenize.COMMENT, tokenize.NL, tokenize.NEWLINE, tokenize.INDENT,
        tokenize.DEDENT, tokenize.ENDMARKER, tokenize.ENCODING}

LEXICON = {
    "+", "-", "*", "/", "//", "%", "**",
    "&", "|", "^", "~", "<<", ">>",
    "==", "!=", "<", ">", "<=", ">=",
    "=", "+=", "-=", "*=", "/=", "//=", "%=", "**=", "&=", "|=", "^=",
    "<<=", ">>=", "@=", ":=",
}


def tokens(src):
    return list(tokenize.generate_tokens(io.StringIO(src).readline))


def streams(src):
    ops, kws = [], []
    for t in tokens(src):
        if t.type == tokenize.OP:
            ops.append(t.string)
        elif t.type == tokenize.NAME and keyword.iskeyword(t.string):
            kws.append(t.string)
    return ops, kws


def loc(src):
    lines = src.splitlines()
    covered = set()
    for t in tokens(src):
        if t.type in SKIP:
            continue
        covered.update(range(t.start[0], t.end[0] + 1))
    return sum(1 for n in covered if n - 1 < len(lines) and lines[n - 1].strip())


def unique_ops(src):
    toks = [t for t in tokens(src) if t.type not in SKIP]
    found = set()
    depth = 0
    pending_for = []
    i = 0
    while i < len(toks):
        t = toks[i]
        s = t.string
        nxt = toks[i + 1].string if i + 1 < len(toks) else None
        if t.type == tokenize.OP:
            if s in "([{":
                depth += 1
            elif s in ")]}":
                depth -= 1
                while pending_for and pending_for[-1] > depth:
                    pending_for.pop()
            elif s in LEXICON:
                found.add(s)
        elif t.type == tokenize.NAME:
            if s == "for":
                pending_for.append(depth)
            elif s == "is":
                if nxt == "not":
                    found.add("is not")
                    i += 1
                else:
                    found.add("is")
            elif s == "not":
                if nxt == "in":
                    found.add("not in")
                    i += 1
                else:
                    found.add("not")
            elif s == "in":
                if pending_for and pending_for[-1] == depth:
                    pending_for.pop()
                else:
                    found.add("in")
            elif s in ("and", "or"):
                found.add(s)
        i += 1
    return len(found)


def functions(visitor):
    out = []

    def walk_fn(f):
        out.append(f.complexity)
        for c in f.closures:
            walk_fn(c)

    def walk_cls(c):
        for m in c.methods:
            walk_fn(m)
        for inner in getattr(c, "inner_classes", []):
            walk_cls(inner)

    for f in visitor.functions:
        walk_fn(f)
    for c in visitor.classes:
        walk_cls(c)
    return out


def cyclomatic(src):
    v = ComplexityVisitor.from_code(src)
    fns = functions(v)
    if not fns:
        return v.complexity
    return sum(fns) + v.complexity - 1


COMPOUND = (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef, ast.If, ast.For,
            ast.AsyncFor, ast.While, ast.With, ast.AsyncWith, ast.Try)


def nesting(src):
    best = 0

    def block(stmts, d):
        nonlocal best
        for s in stmts:
            best = max(best, d)
            if not isinstance(s, COMPOUND):
                continue
            block(s.body, d + 1)
            if isinstance(s, ast.Try):
                for h in s.handlers:
                    block(h.body, d + 1)
                block(s.orelse, d + 1)
                block(s.finalbody, d + 1)
            elif isinstance(s, ast.If):
                chain = s.orelse
                if len(chain) == 1 and isinstance(chain[0], ast.If) and chain[0].col_offset == s.col_offset:
                    block(chain, d)
                else:
                    block(chain, d + 1)
            elif hasattr(s, "orelse"):
                block(s.orelse, d + 1)

    block(ast.parse(src).body, 0)
    return best


PRELUDE = ["from common import *", "import numpy as np"]


def strip_prelude(src):
    keep = [l for l in src.splitlines() if l.strip() not in PRELUDE]
    return "\n".join(keep) + "\n"


def report(src):
    return {"loc": loc(src), "cyclomatic": cyclomatic(src),
            "nesting_depth": nesting(src), "unique_ops": unique_ops(src)}


def main():
    root = pathlib.Path(__file__).parent / "metrics_corpus"
    out = {}
    for path in sorted(root.glob("*.py")):
        src = path.read_text()
        ops, kws = streams(src)
        entry = {"report": report(src), "operators": ops, "keywords": kws}
        if "from common import *" in src:
            entry["solution_report"] = report(strip_prelude(src))
        out[path.name] = entry
    json.dump(out, sys.stdout, indent=1, sort_keys=True)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
