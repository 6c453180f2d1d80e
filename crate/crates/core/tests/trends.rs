//! Finite-size behavior of the ensemble means: the bias of the simulated
//! minimal risk against its large-N value shrinks as the market grows.

use minrisk::experiment::{run_sweep, SweepConfig};
use minrisk::market::ReturnDistribution;
use minrisk::model::SolverId;
use minrisk::variance::VarianceSpec;

#[test]
fn risk_bias_shrinks_with_market_size() {
    let samples = 80;
    let mut biases = Vec::new();
    let mut stderrs = Vec::new();
    for (idx, n_assets) in [50usize, 100, 200, 400].into_iter().enumerate() {
        let cfg = SweepConfig {
            n_assets,
            alpha_grid: vec![2.0],
            samples,
            variance: VarianceSpec::Identical { s: 1.0 },
            dist: ReturnDistribution::Gaussian,
            method: SolverId::Exact,
            base_seed: 7100 + idx as u64,
            gamma: 1.0,
        };
        let rec = &run_sweep(&cfg).unwrap().records[0];
        biases.push((rec.eps_mean - 0.5).abs());
        stderrs.push(rec.eps_stderr);
    }
    // monotone within error bars: no significant growth from N to 2N
    for k in 0..biases.len() - 1 {
        let slack = 2.0 * (stderrs[k] + stderrs[k + 1]);
        assert!(
            biases[k + 1] <= biases[k] + slack,
            "bias grew from {} to {} between sizes (slack {slack})",
            biases[k],
            biases[k + 1]
        );
    }
    // and the end-to-end trend is a real reduction
    assert!(
        biases[3] < biases[0] + 2.0 * (stderrs[0] + stderrs[3]),
        "bias did not shrink: {biases:?}"
    );
}
