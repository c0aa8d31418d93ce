"""Regenerate the bundled three-film mini corpus from fixed style profiles."""
import json
from pathlib import Path

from scripteval.formatting import (
    BlanklinePolicy, DialogueMarker, EmphasisStyle, FormatProfile, SceneHeaderStyle, StageMarker,
    synthesize_script,
)

OUT = Path(__file__).resolve().parents[2] / "src" / "scripteval" / "data" / "minicorpus"

FILMS = {
    "harbor_night": (
        FormatProfile(SceneHeaderStyle.NUMBER_BOLD, DialogueMarker.ROLE_COLON, StageMarker.TRIANGLE,
                      BlanklinePolicy.DOUBLE_NEWLINE, EmphasisStyle.MARKDOWN_BOLD),
        {"title": "Harbor Night", "year": 2016, "genre": "crime"},
    ),
    "winter_letters": (
        FormatProfile(SceneHeaderStyle.NUMBER_DOT_META, DialogueMarker.ROLE_NEWLINE, StageMarker.PAREN,
                      BlanklinePolicy.SINGLE_NEWLINE, EmphasisStyle.NONE),
        {"title": "Winter Letters", "year": 2009, "genre": "drama"},
    ),
    "rooftop_summer": (
        FormatProfile(SceneHeaderStyle.SCENE_WORD, DialogueMarker.ROLE_COLON, StageMarker.BLACK_TRIANGLE,
                      BlanklinePolicy.MIXED, EmphasisStyle.NONE),
        {"title": "Rooftop Summer", "year": 2021, "genre": "comedy"},
    ),
}


LINES = {"harbor_night": 640, "winter_letters": 360, "rooftop_summer": 420}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    meta = {}
    for i, (film_id, (profile, info)) in enumerate(sorted(FILMS.items())):
        (OUT / f"{film_id}.txt").write_text(synthesize_script(profile, LINES[film_id], seed=100 + i), encoding="utf-8")
        meta[film_id] = info
    (OUT / "meta.json").write_text(json.dumps(meta, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
