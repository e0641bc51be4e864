#!/usr/bin/env python3
"""Subprocess renderer backed by vl-convert.

Reads a spec document with inline data.values on stdin and writes a PNG to
stdout. Exit 2 means the document does not compile, exit 3 means it failed
against its data. vl-convert draws missing fields as empty charts, so field
references are checked here first.
"""

import argparse
import json
import sys

CHANNELS = ("x", "y", "color", "theta", "size", "row", "column", "facet", "opacity", "shape")


def fail(code, message):
    sys.stderr.write(message + "\n")
    sys.exit(code)


def transform_outputs(step):
    out = []
    for agg in step.get("aggregate", []):
        if "as" in agg:
            out.append(agg["as"])
    if "as" in step and isinstance(step["as"], str):
        out.append(step["as"])
    return out


def transform_inputs(step):
    used = []
    for agg in step.get("aggregate", []):
        if "field" in agg:
            used.append(agg["field"])
    used += step.get("groupby", [])
    flt = step.get("filter")
    if isinstance(flt, dict) and "field" in flt:
        used.append(flt["field"])
    for key in step.get("sort", []):
        if isinstance(key, dict) and "field" in key:
            used.append(key["field"])
    return used


def check_fields(doc):
    values = doc.get("data", {}).get("values")
    if not isinstance(values, list):
        fail(3, "runtime error: data.values is missing")
    known = set()
    for row in values:
        if isinstance(row, dict):
            known.update(row)
    for step in doc.get("transform", []):
        for name in transform_inputs(step):
            if name not in known:
                fail(3, f"runtime error: transform references missing field '{name}'")
        # Aggregates replace the row set: only groupby keys and outputs survive.
        if "aggregate" in step:
            known = set(step.get("groupby", []))
        known.update(transform_outputs(step))
    for channel, enc in doc.get("encoding", {}).items():
        if channel in CHANNELS and isinstance(enc, dict) and "field" in enc and enc["field"] not in known:
            fail(3, f"runtime error: encoding.{channel} references missing field '{enc['field']}'")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scale", type=float, default=1.0)
    args = parser.parse_args()
    try:
        doc = json.loads(sys.stdin.read())
    except json.JSONDecodeError as e:
        fail(2, f"compile error: {e}")
    if not isinstance(doc, dict) or "mark" not in doc:
        fail(2, "compile error: document has no mark")
    check_fields(doc)
    try:
        import vl_convert as vlc
    except ImportError:
        fail(127, "vl_convert is not installed")
    try:
        png = vlc.vegalite_to_png(vl_spec=doc, scale=args.scale)
    except Exception as e:  # vl-convert raises plain ValueError for most faults
        fail(2, f"compile error: {e}")
    sys.stdout.buffer.write(png)


if __name__ == "__main__":
    main()
