"""Regenerate data/models/*.json and data/checksums.json from the raw published tables."""

import hashlib
import json
from pathlib import Path

from boxwing_doe.published_models import PUBLISHED_MODEL_IDS, model_from_table, render_model_json

DATA = Path(__file__).resolve().parents[1] / "src" / "boxwing_doe" / "data"


def main():
    sums = {}
    for model_id in PUBLISHED_MODEL_IDS:
        model = model_from_table(model_id)
        text = render_model_json(model)
        fname = f"{model_id}.json"
        (DATA / "models" / fname).write_text(text)
        sums[fname] = hashlib.sha256(text.encode()).hexdigest()
        print(f"{fname:28s} {model.n_terms:3d} coefficients")
    (DATA / "checksums.json").write_text(json.dumps(sums, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
