#!/usr/bin/env python

"""Regenerate models/experiment_schema.json from ExperimentConfig.

Run with --check to fail instead of writing when the file is stale.
"""

import json
import sys
from pathlib import Path

# Root directory of the project
ROOT_DIR = Path(__file__).parent.parent
sys.path.insert(0, str(ROOT_DIR))

from models.experiment import ExperimentConfig  # noqa: E402

SCHEMA_PATH = ROOT_DIR / "models" / "experiment_schema.json"


def render_schema() -> dict:
    return ExperimentConfig.model_json_schema(by_alias=True)


def main() -> int:
    schema = render_schema()
    if "--check" in sys.argv[1:]:
        current = json.loads(SCHEMA_PATH.read_text()) if SCHEMA_PATH.exists() else None
        if current != schema:
            print(f"{SCHEMA_PATH} is out of date, run scripts/sync_schema.py")
            return 1
        print(f"{SCHEMA_PATH} is up to date")
        return 0
    SCHEMA_PATH.write_text(json.dumps(schema, indent=2) + "\n")
    print(f"Updated {SCHEMA_PATH}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
