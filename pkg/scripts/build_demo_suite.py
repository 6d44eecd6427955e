#!/usr/bin/env python3
"""Write the bundled scripted suite to disk for CLI experiments.

Usage: python scripts/build_demo_suite.py [outdir]

Produces <outdir>/tasks.jsonl and <outdir>/models.json, ready for:

    python -m backgen.cli bench --tasks <outdir>/tasks.jsonl \
        --provider scripted:<outdir>/models.json --mode rocode
"""

import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from backgen.suite import suite_documents  # noqa: E402


def main():
    outdir = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "demo")
    outdir.mkdir(parents=True, exist_ok=True)
    tasks, models = suite_documents()
    tasks_path = outdir / "tasks.jsonl"
    with open(tasks_path, "w", encoding="utf-8") as fh:
        for task in tasks:
            fh.write(json.dumps(task, ensure_ascii=False) + "\n")
    models_path = outdir / "models.json"
    with open(models_path, "w", encoding="utf-8") as fh:
        json.dump(models, fh, indent=2, ensure_ascii=False)
    print(f"wrote {tasks_path} ({len(tasks)} tasks) and {models_path}")


if __name__ == "__main__":
    main()
