#!/usr/bin/env python3
"""Prepends the Apache-2.0 header to source files that lack it."""
import argparse
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent
DIRS = ["src", "include", "tests", "tools", "assets/ui", "cmake"]
MARK = "Licensed under the Apache License"


def comment(lines, style):
    if style == "//":
        return ["// " + l if l else "//" for l in lines]
    if style == "#":
        return ["# " + l if l else "#" for l in lines]
    return ["<!--"] + ["  " + l if l else "" for l in lines] + ["-->"]


def style_for(path):
    if path.suffix in (".cpp", ".hpp", ".h", ".js"):
        return "//"
    if path.suffix in (".py", ".cmake") or path.name == "CMakeLists.txt":
        return "#"
    if path.suffix == ".html":
        return "<!--"
    return None


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--license", default="/tmp/license.txt",
                    help="header text in // comment form")
    args = ap.parse_args()
    raw = pathlib.Path(args.license).read_text().splitlines()
    body = [l[3:] if l.startswith("// ") else l.lstrip("/") for l in raw]
    while body and not body[-1].strip():
        body.pop()

    files = [ROOT / "CMakeLists.txt"]
    for d in DIRS:
        files += sorted(p for p in (ROOT / d).rglob("*") if p.is_file())
    changed = 0
    for path in files:
        style = style_for(path)
        if style is None or "fixtures" in path.parts:
            continue
        text = path.read_text()
        if MARK in text[:1000]:
            continue
        header = "\n".join(comment(body, style)) + "\n\n"
        if text.startswith("#!"):
            first, _, rest = text.partition("\n")
            text = first + "\n" + header + rest
        elif text.lower().startswith("<!doctype"):
            first, _, rest = text.partition("\n")
            text = first + "\n" + header + rest
        else:
            text = header + text
        path.write_text(text)
        changed += 1
    print(f"{changed} files updated")


if __name__ == "__main__":
    main()
