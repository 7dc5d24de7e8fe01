//! Plain-text rendering of an evaluation report.

use std::fmt::Write;

use namefly_core::eval::{Bucket, EvalReport};

fn bucket_line(out: &mut String, b: &Bucket) {
    let hr = b.hr1.map_or("-".to_string(), |h| format!("{h:.4}"));
    let _ = writeln!(
        out,
        "  {:<14} n={:<5} hits={:<5} hr@1={}",
        b.label, b.count, b.hits, hr
    );
}

pub fn text(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "test instances: {} positive, {} nil",
        r.positives, r.nils
    );
    let _ = writeln!(out, "ranking (positives)");
    let _ = writeln!(
        out,
        "  hr@1={:.4} hr@3={:.4} hr@5={:.4} mrr={:.4}",
        r.hr1, r.hr3, r.hr5, r.mrr
    );
    let c = &r.confusion;
    let _ = writeln!(out, "decision");
    let _ = writeln!(out, "  tp={} fn={} tn={} fp={}", c.tp, c.fn_, c.tn, c.fp);
    for (name, s) in [("positive", &r.scores.positive), ("nil", &r.scores.nil)] {
        let _ = writeln!(
            out,
            "  {name:<8} p={:.4} r={:.4} f1={:.4}",
            s.precision, s.recall, s.f1
        );
    }
    if r.scores.degenerate {
        let _ = writeln!(out, "  (some denominators were zero and scored as 0)");
    }
    let _ = writeln!(out, "hr@1 by same-coauthor ratio");
    for b in &r.strata.bins {
        bucket_line(&mut out, b);
    }
    bucket_line(&mut out, &r.strata.easy);
    bucket_line(&mut out, &r.strata.hard);
    bucket_line(&mut out, &r.strata.degenerate);
    out
}
