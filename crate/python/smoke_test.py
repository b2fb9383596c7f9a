"""Smoke test for the compiled `guielicit` extension.

Build and install it first, e.g. `maturin develop -m crates/python/Cargo.toml`.
"""

import json
import pathlib
import sys
import tempfile

import guielicit as g

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def main() -> int:
    corpus = g.Corpus(str(FIXTURES / "corpus"))
    assert len(corpus) == 60

    ranked = corpus.rank("weather forecast with hourly list", top_k=10)
    assert len(ranked) == 10 and ranked[0]["rank"] == 1
    print("top GUI:", ranked[0]["gui_id"], round(ranked[0]["ensemble"], 4))

    session = g.Session(corpus, "Weather", script=str(FIXTURES / "llm_script.json"))
    slot = session.submit_gui_query(0, "weather forecast with hourly list")
    session.select_gui(0, slot["current_ranking"][0]["gui_id"])
    recs = session.request_recommendations(0)
    first = recs[0]["feature"]
    session.respond_to_recommendation(
        0, first["feature_id"], {"decision": "select_aspect", "gui_id": recs[0]["aspect_ranking"][0]["gui_id"]}
    )
    session.complete_slot(0)
    artifact = json.loads(session.artifact_json())
    assert artifact["slots"][0]["aspect_guis"][0]["feature_id"] == first["feature_id"]
    assert session.verify_replay()

    try:
        session.select_gui(0, "weather_home")
    except g.StateConflictError:
        pass
    else:
        raise AssertionError("completed slot accepted a selection")

    with tempfile.TemporaryDirectory() as d:
        session.save(d)
        assert g.Session.load(corpus, d, session.session_id).state() == session.state()

    assert g.average_precision([True, False, True]) == (1 + 2 / 3) / 2
    print("ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
