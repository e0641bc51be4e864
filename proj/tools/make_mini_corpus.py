#!/usr/bin/env python3
"""Generate the bundled mini-corpus of (query, spec, table) triples.

Output is deterministic for a given --seed. Every triple stays inside the
supported spec subset except one boxplot record, which the bench builder
must exclude.
"""

import argparse
import csv
import io
import json
import random
from pathlib import Path

THEMES = [
    {
        "name": "sales",
        "categories": {
            "product": ["Atlas", "Beacon", "Cobalt", "Delta", "Ember", "Flint"],
            "region": ["North", "South", "East"],
            "channel": ["Online", "Retail"],
        },
        "ordered": ("month", ["Jan", "Feb", "Mar", "Apr", "May", "Jun"]),
        "measures": {"units": (10, 400, 0), "revenue": (500, 9000, 2)},
    },
    {
        "name": "weather",
        "categories": {
            "city": ["Oslo", "Lima", "Cairo", "Perth", "Quito"],
            "season": ["Winter", "Spring", "Summer", "Autumn"],
            "station": ["Coastal", "Inland"],
        },
        "ordered": ("year", ["2019", "2020", "2021", "2022", "2023"]),
        "measures": {"rainfall": (5, 300, 1), "temperature": (-5, 35, 1)},
    },
    {
        "name": "survey",
        "categories": {
            "age_group": ["18-24", "25-34", "35-44", "45-54", "55+"],
            "gender": ["Men", "Women"],
            "answer": ["Agree", "Neutral", "Disagree"],
        },
        "ordered": ("wave", ["W1", "W2", "W3", "W4"]),
        "measures": {"respondents": (20, 900, 0), "score": (1, 10, 2)},
    },
    {
        "name": "energy",
        "categories": {
            "source": ["Solar", "Wind", "Hydro", "Gas", "Coal"],
            "sector": ["Industry", "Homes", "Transport"],
            "grid": ["Urban", "Rural"],
        },
        "ordered": ("quarter", ["Q1", "Q2", "Q3", "Q4"]),
        "measures": {"output_gwh": (50, 2500, 0), "cost": (20, 140, 2)},
    },
]

AGG_WORD = {"sum": "total", "mean": "average", "max": "maximum", "min": "minimum", "median": "median"}


def fmt(value, digits):
    return str(int(round(value))) if digits == 0 else f"{value:.{digits}f}"


def make_table(rng, theme, n_rows):
    cats = theme["categories"]
    ord_name, ord_values = theme["ordered"]
    names = list(cats) + [ord_name] + list(theme["measures"])
    rows = []
    for _ in range(n_rows):
        row = [rng.choice(values) for values in cats.values()]
        row.append(rng.choice(ord_values))
        for lo, hi, digits in theme["measures"].values():
            row.append(fmt(rng.uniform(lo, hi), digits))
        rows.append(row)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    writer.writerows(rows)
    return buf.getvalue().rstrip("\n"), names, rows


def field(name, kind, **extra):
    enc = {"field": name, "type": kind}
    enc.update(extra)
    return enc


def bar_encoding_agg(rng, theme):
    cat = rng.choice(list(theme["categories"]))
    measure = rng.choice(list(theme["measures"]))
    op = rng.choice(["sum", "mean", "max"])
    spec = {
        "mark": "bar",
        "encoding": {"x": field(cat, "nominal"), "y": field(measure, "quantitative", aggregate=op)},
    }
    return spec, f"Show the {AGG_WORD[op]} {measure} for each {cat}."


def bar_transform_agg(rng, theme):
    cat = rng.choice(list(theme["categories"]))
    measure = rng.choice(list(theme["measures"]))
    op = rng.choice(["sum", "mean", "median", "min"])
    alias = f"{op}_{measure}"
    order = rng.choice(["ascending", "descending"])
    spec = {
        "mark": "bar",
        "transform": [
            {"aggregate": [{"op": op, "field": measure, "as": alias}], "groupby": [cat]},
            {"sort": [{"field": alias, "order": order}]},
        ],
        "encoding": {"x": field(cat, "nominal"), "y": field(alias, "quantitative")},
    }
    word = "lowest" if order == "ascending" else "highest"
    return spec, f"Compare the {AGG_WORD[op]} {measure} by {cat}, starting from the {word}."


def bar_filtered(rng, theme, rows, names):
    cats = list(theme["categories"])
    cat = rng.choice([c for c in cats if len(theme["categories"][c]) >= 3])
    other = rng.choice([c for c in cats if c != cat])
    # Keep at least three bars after filtering so every chart has a QA template.
    kept = {}
    for r in rows:
        kept.setdefault(r[names.index(other)], set()).add(r[names.index(cat)])
    value = rng.choice(sorted(v for v, seen in kept.items() if len(seen) >= 3) or sorted(kept))
    measure = rng.choice(list(theme["measures"]))
    spec = {
        "mark": "bar",
        "transform": [{"filter": {"field": other, "equal": value}}],
        "encoding": {"x": field(cat, "nominal"), "y": field(measure, "quantitative", aggregate="sum")},
    }
    return spec, f"For {other} {value}, show the total {measure} per {cat}."


def bar_count(rng, theme):
    cat = rng.choice(list(theme["categories"]))
    spec = {"mark": "bar", "encoding": {"x": field(cat, "nominal"), "y": {"aggregate": "count", "type": "quantitative"}}}
    return spec, f"How many records are there for each {cat}?"


def line_over_order(rng, theme):
    ord_name, _ = theme["ordered"]
    measure = rng.choice(list(theme["measures"]))
    spec = {"mark": "line", "encoding": {"x": field(ord_name, "ordinal"), "y": field(measure, "quantitative", aggregate="sum")}}
    if rng.random() < 0.5:
        cat = rng.choice(list(theme["categories"]))
        spec["encoding"]["color"] = field(cat, "nominal")
        return spec, f"Plot the total {measure} over {ord_name} with one line per {cat}."
    return spec, f"Show how the total {measure} changes over {ord_name}."


def area_over_order(rng, theme):
    ord_name, _ = theme["ordered"]
    measure = rng.choice(list(theme["measures"]))
    spec = {"mark": "area", "encoding": {"x": field(ord_name, "ordinal"), "y": field(measure, "quantitative", aggregate="mean")}}
    return spec, f"Draw an area chart of the average {measure} by {ord_name}."


def scatter(rng, theme):
    a, b = list(theme["measures"])
    cat = rng.choice(list(theme["categories"]))
    spec = {
        "mark": "point",
        "encoding": {"x": field(a, "quantitative"), "y": field(b, "quantitative"), "color": field(cat, "nominal")},
    }
    return spec, f"Plot {b} against {a}, coloured by {cat}."


def pie(rng, theme):
    cat = rng.choice(list(theme["categories"]))
    measure = rng.choice(list(theme["measures"]))
    spec = {
        "mark": "arc",
        "encoding": {"theta": field(measure, "quantitative", aggregate="sum"), "color": field(cat, "nominal")},
    }
    return spec, f"What share of the total {measure} does each {cat} account for?"


def grouped_bar(rng, theme):
    cat, other = rng.sample(list(theme["categories"]), 2)
    measure = rng.choice(list(theme["measures"]))
    spec = {
        "mark": "bar",
        "encoding": {
            "x": field(cat, "nominal"),
            "y": field(measure, "quantitative", aggregate="sum"),
            "color": field(other, "nominal"),
        },
    }
    return spec, f"Show the total {measure} by {cat}, split by {other}."


def generate(seed, count):
    rng = random.Random(seed)
    makers = [bar_encoding_agg, bar_transform_agg, bar_filtered, bar_count, line_over_order, area_over_order, scatter,
              pie, grouped_bar]
    records = []
    for i in range(count):
        theme = THEMES[i % len(THEMES)]
        table, names, rows = make_table(rng, theme, rng.randint(12, 30))
        maker = makers[(i // len(THEMES) + i) % len(makers)]
        if maker is bar_filtered:
            spec, query = maker(rng, theme, rows, names)
        else:
            spec, query = maker(rng, theme)
        records.append({"id": f"mc-{i + 1:03d}", "query": query, "spec": spec, "table": table})

    theme = THEMES[0]
    table, _, _ = make_table(rng, theme, 20)
    records.append({
        "id": f"mc-{count + 1:03d}",
        "query": "Show the distribution of revenue for each region as a box plot.",
        "spec": {"mark": "boxplot", "encoding": {"x": field("region", "nominal"), "y": field("revenue", "quantitative")}},
        "table": table,
    })
    return records


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--count", type=int, default=83, help="supported triples before the boxplot record")
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data/mini_corpus/corpus.jsonl")
    args = parser.parse_args()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", encoding="utf-8") as f:
        for rec in generate(args.seed, args.count):
            f.write(json.dumps(rec, separators=(",", ":"), sort_keys=False) + "\n")


if __name__ == "__main__":
    main()
