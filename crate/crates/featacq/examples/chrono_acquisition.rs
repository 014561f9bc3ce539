//! Chronologically constrained acquisition over a time series: steps can
//! only be bought in increasing order, a Dirichlet prior over the next step
//! favors earlier ones, and informativeness draws update it toward the
//! steps that actually separate the classes.
//!
//! Run with `cargo run --example chrono_acquisition`.

use featacq::experiment::mean_stderr;
use featacq::model::{fit_engine, EngineChoice};
use featacq::synth::{gen_chrono_chain, ChronoSpec};
use featacq::timeseries::{
    posterior_params, prior_params, run_chrono_episode, ChronoPolicy,
};

fn main() {
    // Prior over the first pick of a 6-step series: concentration
    // alpha * (T - t), so step 0 is most likely a priori.
    let prior = prior_params(6, None, 10.0).unwrap();
    println!("Dirichlet prior over 6 steps, alpha = 10:");
    println!("  support        {:?}", prior.support);
    println!("  concentrations {:?}", prior.concentrations);

    // Conjugacy: informativeness draws add straight onto the concentrations.
    let post = posterior_params(&prior, &[0, 0, 25, 5, 0, 0]).unwrap();
    println!("after 30 draws favoring step 2:");
    println!("  concentrations {:?}", post.concentrations);

    // After acquiring step 2, only later steps remain in the support.
    let resumed = prior_params(6, Some(2), 10.0).unwrap();
    println!("prior once step 2 is acquired: support {:?}\n", resumed.support);

    // Episodes on the drifting chain, where later steps carry more signal.
    let spec = ChronoSpec { n: 4000, ..ChronoSpec::standard(9) };
    let ds = gen_chrono_chain(&spec);
    let (train, _, test) = ds.split((0.8, 0.1, 0.1), 9).unwrap();
    let model = fit_engine(&train, EngineChoice::ClassConditional(1), 9).unwrap();
    let labels = test.labels.as_ref().unwrap();
    let n_eval = 150.min(test.n());

    for (what, policy) in [
        ("dirichlet, alpha=10 (prior-heavy)", ChronoPolicy::Dirichlet { alpha: 10.0 }),
        ("dirichlet, alpha=0.1 (data-heavy)", ChronoPolicy::Dirichlet { alpha: 0.1 }),
        ("uniform baseline", ChronoPolicy::Uniform),
    ] {
        let mut firsts = Vec::with_capacity(n_eval);
        let mut correct = Vec::with_capacity(n_eval);
        let mut example = None;
        for (r, &label) in labels.iter().enumerate().take(n_eval) {
            let t = run_chrono_episode(
                &model.engine,
                &test.row(r),
                spec.t_steps,
                spec.step_width,
                policy,
                3,
                None,
                10,
                1000 + r as u64,
            )
            .unwrap();
            firsts.push(t.steps[0].selected_step as f64);
            let last = t.steps.last().unwrap();
            correct.push((last.prediction.class() == Some(label)) as u8 as f64);
            if r == 0 {
                example = Some(t.selected_steps());
            }
        }
        let (mf, _) = mean_stderr(&firsts);
        let (acc, _) = mean_stderr(&correct);
        println!("{what}: budget 3 over {} steps, {n_eval} instances", spec.t_steps);
        println!("  mean first selected step {mf:.2}");
        println!("  accuracy after 3 steps   {acc:.4}");
        println!("  instance 0 visited steps {:?}", example.unwrap());
    }
    println!("\na heavy prior buys early steps (cheap, weak); a weak prior follows");
    println!("the informativeness draws toward the late, strongly drifted steps.");
    println!("selected steps always increase: the constraint is structural,");
    println!("acquire_step rejects any step at or before the last one bought");
}
