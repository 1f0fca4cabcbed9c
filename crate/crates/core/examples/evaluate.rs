//! Temporal event matching and the summary table.

use nearcrash::eval::{self, EvalReport, TimedEvent};

fn main() {
    let gt = [("a", 12.0), ("a", 80.0), ("b", 30.0), ("c", 5.0)];
    let pred = [("a", 14.5), ("a", 40.0), ("b", 38.0), ("c", 17.0)];
    let gt: Vec<_> = gt.iter().map(|&(v, t)| TimedEvent::new(v, t)).collect();
    let pred: Vec<_> = pred.iter().map(|&(v, t)| TimedEvent::new(v, t)).collect();
    let (report, outcome) = eval::report(&pred, &gt, eval::DEFAULT_MATCH_WINDOW, None, Some(24.0));
    for m in &outcome.matches {
        println!("matched {:?} -> {:?} ({:.1}s apart)", pred[m.prediction], gt[m.ground_truth], m.dt);
    }
    print!("{}", report.render_table());

    println!("\nPublished summary counts:");
    print!("{}", EvalReport::from_counts(100, 35, 34, 7, 1, Some(18.0)).render_table());
}
