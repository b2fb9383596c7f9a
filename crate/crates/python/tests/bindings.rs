use std::ffi::CString;
use std::path::Path;

use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    Python::attach(|py| {
        let m = PyModule::new(py, "guielicit").unwrap();
        guielicit::register(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("g", m).unwrap();
        globals.set_item("FIXTURES", fixtures.to_str().unwrap()).unwrap();
        let code = CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.display(py);
            panic!("python snippet failed: {e}");
        }
    });
}

#[test]
fn corpus_ranking_and_matching() {
    run(r#"
c = g.Corpus(FIXTURES + "/corpus")
assert len(c) == 60
assert len(g.Corpus(FIXTURES + "/corpus", default_filters=True)) == 56
ranked = c.rank("music player with shuffle", top_k=5)
assert [r["rank"] for r in ranked] == [1, 2, 3, 4, 5]
assert all(r["ensemble"] >= s["ensemble"] for r, s in zip(ranked, ranked[1:]))
aspects = c.match_feature("volume slider", "music player", k=3)
assert len(aspects) == 3 and aspects[0]["component_id"] is not None
s = c.score_feature("volume slider", aspects[0]["gui_id"])
assert abs(s["score"] - aspects[0]["gui_score"]) < 1e-12
rr = c.rerank("music player", ["volume slider"], beta=0.3)
assert all(r["rerank_score"] is not None for r in rr)
assert c.gui("shop_home")["gui_id"] == "shop_home"
try:
    c.gui("nope")
    raise AssertionError("expected NotFoundError")
except g.NotFoundError:
    pass
try:
    c.rank("x", alpha=2.0)
    raise AssertionError("expected BadRequestError")
except g.BadRequestError as e:
    assert isinstance(e, g.GuielicitError)
"#);
}

#[test]
fn metrics() {
    run(r#"
assert g.average_precision([False, True, False, True]) == 0.5
assert g.reciprocal_rank([False, False, True]) == 1 / 3
assert g.precision_at([True, False], 5) == 0.5
assert g.hits_at([1, None, 3], 1) == 1 / 3
try:
    g.precision_at([True], 0)
    raise AssertionError("expected BadRequestError")
except g.BadRequestError:
    pass
"#);
}

#[test]
fn session_flow() {
    run(r#"
import tempfile
c = g.Corpus(FIXTURES + "/corpus")
s = g.Session(c, "Shop", script=FIXTURES + "/llm_script.json")
assert s.phase(0) == "awaiting_query"
try:
    s.complete_slot(0)
    raise AssertionError("expected StateConflictError")
except g.StateConflictError:
    pass
slot = s.submit_gui_query(0, "shopping product detail page with add to cart button")
top = slot["current_ranking"][0]["gui_id"]
s.select_gui(0, top)
sub = s.submit_feature(0, "checkout button")
fid = sub["feature"]["feature_id"]
s.decide_feature(0, fid, {"decision": "select_aspect", "gui_id": sub["aspect_ranking"][0]["gui_id"]})
recs = s.request_recommendations(0)
assert recs
s.respond_to_recommendation(0, recs[0]["feature"]["feature_id"], {"decision": "relevant_no_aspect"})
s.complete_slot(0)
art = s.export_artifact()
assert art["slots"][0]["selected_gui"] == top
assert s.artifact_json().endswith("\n")
assert "Shop" in s.summary_markdown()
assert s.verify_replay()
with tempfile.TemporaryDirectory() as d:
    s.save(d)
    again = g.Session.load(c, d, s.session_id)
    assert again.state() == s.state()
"#);
}
