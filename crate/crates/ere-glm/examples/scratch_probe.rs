//! Temporary development probe (removed before release).

use ere_glm::inference::infer;
use ere_glm::screening::{screen, screen_dataset, ScreenResult};
use ere_glm::sim::{generate, ground_truth_h, run_with_screening, Method, SimModel};

fn main() {
    let model = SimModel::model(1, 2.0).unwrap();
    let truth = ground_truth_h(&model, 0, 10_000, 7).unwrap().h;
    println!("truth at delta=2: {truth:.4}");

    for target_size in [60usize, 150, 250] {
        let t0 = std::time::Instant::now();
        let reps = 40;
        let mut covered = 0;
        let mut h_sum = 0.0;
        let mut stm_sum = 0;
        let mut contained = 0;
        let mut fails = 0;
        for rep in 0..reps {
            let data = generate(&model, 9_000 + rep);
            let base = screen_dataset(&data, &model.fit_family, None, None, &[]).unwrap();
            // pick the threshold that yields the target screened size
            let mut abs: Vec<f64> = base.mmle.iter().map(|m| m.abs()).collect();
            abs.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let gamma = abs[target_size - 1];
            let selected = screen(&base.mmle, gamma);
            let truth_support = model.true_support();
            if truth_support.iter().all(|j| selected.contains(j)) {
                contained += 1;
            }
            let forced = ScreenResult { selected, threshold: gamma, ..base };
            match run_with_screening(&data, &model.modalities, 0, Method::SisScad, &model.fit_family, &forced)
            {
                Ok(out) => {
                    let inf = infer(&out.estimate, 0.05, true).unwrap();
                    let upper = inf.ci_upper.unwrap_or(f64::INFINITY);
                    if inf.ci_lower <= truth && truth <= upper {
                        covered += 1;
                    }
                    h_sum += out.estimate.h_hat;
                    stm_sum += out.s_tilde_m;
                }
                Err(e) => {
                    fails += 1;
                    if fails < 3 {
                        println!("  rep {rep} failed: {e}");
                    }
                }
            }
        }
        let ok = reps - fails;
        println!(
            "s_tilde={target_size}: coverage={:.3} mean_h={:.3} mean_stm={:.1} contained={}/{} fails={} elapsed={:?}",
            covered as f64 / ok.max(1) as f64,
            h_sum / ok.max(1) as f64,
            stm_sum as f64 / ok.max(1) as f64,
            contained,
            reps,
            fails,
            t0.elapsed()
        );
    }
}
