//! Confidence calibration for early stopping. A model fit on scarce data
//! reports overconfident max-class probabilities; a per-step histogram map
//! fit on validation pairs relearns what each confidence level actually
//! delivers before it gates the stop rule.
//!
//! Run with `cargo run --example calibrated_stopping`.

use featacq::calibration::{ece, fit_calibration};
use featacq::dataset::Dataset;
use featacq::experiment::{consecutive_confidence_table, mean_stderr};
use featacq::model::{fit_engine, EngineChoice};
use featacq::synth::{gen_chrono_chain, ChronoSpec};
use featacq::timeseries::run_consecutive;
use nalgebra::DMatrix;

fn head(ds: &Dataset, n: usize) -> Dataset {
    Dataset::new(
        DMatrix::from_fn(n, ds.d(), |r, c| ds.rows[(r, c)]),
        ds.labels.as_ref().map(|ls| ls[..n].to_vec()),
        ds.task,
        ds.feature_names.clone(),
    )
    .unwrap()
}

fn main() {
    let spec = ChronoSpec { n: 6000, ..ChronoSpec::standard(7) };
    let ds = gen_chrono_chain(&spec);
    let (train, val, test) = ds.split((0.8, 0.1, 0.1), 7).unwrap();

    // 90 rows over 12 features: the covariance estimates are noisy and the
    // class posteriors come out sharper than they deserve.
    let model = fit_engine(&head(&train, 90), EngineChoice::ClassConditional(1), 7).unwrap();

    // Fit the map on validation pairs, judge it on test pairs.
    let table = consecutive_confidence_table(&model, &val, spec.t_steps, spec.step_width).unwrap();
    let calib = fit_calibration(&table, 10).unwrap();
    let held_out =
        consecutive_confidence_table(&model, &test, spec.t_steps, spec.step_width).unwrap();

    println!("expected calibration error on held-out pairs, raw vs calibrated:");
    for (t, pairs) in held_out.iter().enumerate().step_by(3) {
        let before = ece(pairs, 10);
        let after_pairs: Vec<(f64, bool)> =
            pairs.iter().map(|&(c, ok)| (calib.apply(t, c), ok)).collect();
        let after = ece(&after_pairs, 10);
        println!("  step {t:>2}: {before:.4} -> {after:.4}");
    }

    // Reliability mid-series: what each raw confidence range actually
    // delivered on held-out data, next to the map's learned value.
    let mid = 6;
    println!("\nstep {mid} reliability (held-out): raw range, empirical accuracy, map value");
    let mut count = [0usize; 10];
    let mut hits = [0usize; 10];
    for &(c, ok) in &held_out[mid] {
        let b = featacq::calibration::bin_of(c, 10);
        count[b] += 1;
        hits[b] += ok as usize;
    }
    for b in 0..10 {
        if count[b] == 0 {
            continue;
        }
        println!(
            "  [{:.1}, {:.1})  acc {:.4} ({} pairs)  map {:.4}",
            b as f64 / 10.0,
            (b + 1) as f64 / 10.0,
            hits[b] as f64 / count[b] as f64,
            count[b],
            calib.bin_values(mid)[b]
        );
    }

    // Consecutive acquisition on test, stopping at calibrated confidence 0.9.
    let tau = 0.9;
    let labels = test.labels.as_ref().unwrap();
    let mut stops = Vec::new();
    let mut stopped_correct = Vec::new();
    let mut all_correct = Vec::new();
    for (r, &label) in labels.iter().enumerate() {
        let run =
            run_consecutive(&model.engine, &test.row(r), tau, &calib, spec.t_steps, spec.step_width)
                .unwrap();
        let ok = (run.prediction.class() == Some(label)) as u8 as f64;
        all_correct.push(ok);
        stops.push(run.t_stop as f64);
        if *run.calibrated_confidences.last().unwrap() >= tau {
            stopped_correct.push(ok);
        }
    }
    let (mean_stop, _) = mean_stderr(&stops);
    let (acc, _) = mean_stderr(&all_correct);
    println!("\nconsecutive acquisition on {} test instances, tau = {tau}:", test.n());
    println!("  mean stopping step            {mean_stop:.2} of {}", spec.t_steps - 1);
    println!("  reached tau and stopped early {}/{}", stopped_correct.len(), test.n());
    if !stopped_correct.is_empty() {
        let (sacc, _) = mean_stderr(&stopped_correct);
        println!("  accuracy where tau was met    {sacc:.4}");
    }
    println!("  overall accuracy              {acc:.4}");
}
