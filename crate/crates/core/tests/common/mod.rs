#![allow(dead_code)]

use std::sync::Arc;

use ris_nulling::config::ExperimentConfig;
use ris_nulling::po_field::{
    FarFieldDirection, FeedModel, GeometryParams, PatternModel, QuadratureSettings, ReflectorGeometry,
};
use ris_nulling::resnet_sa::MismatchScenario;

pub const DESK_TOML: &str = include_str!("../../../../configs/desk.toml");
pub const FULL_TOML: &str = include_str!("../../../../configs/full.toml");

pub fn desk_config() -> ExperimentConfig {
    ExperimentConfig::parse(DESK_TOML, "configs/desk.toml").expect("shipped desk config parses")
}

pub fn full_config() -> ExperimentConfig {
    ExperimentConfig::parse(FULL_TOML, "configs/full.toml").expect("shipped full config parses")
}

pub fn desk_scenario() -> MismatchScenario {
    desk_config().scenario().expect("desk scenario builds")
}

pub fn full_geometry() -> Arc<ReflectorGeometry> {
    Arc::new(ReflectorGeometry::build(&GeometryParams::default()).unwrap())
}

pub fn model(geometry: &Arc<ReflectorGeometry>, q: f64) -> PatternModel {
    PatternModel::new(
        geometry.clone(),
        FeedModel::with_q(q).unwrap(),
        QuadratureSettings::default(),
    )
    .unwrap()
}

pub fn deg(psi: f64, phi: f64) -> FarFieldDirection {
    FarFieldDirection::from_degrees(psi, phi).unwrap()
}

/// Largest relative error between analytic and central-difference (step
/// 1e-5) gradients over `draws` random width-8, 2-block networks, each with
/// perturbed parameters and a fresh random batch. Relative error is
/// `|a − n| / max(|a|, |n|, 1e-6)`.
pub fn gradient_check_max_rel_error(draws: u64) -> f64 {
    use rand::Rng;
    use ris_nulling::residual_net::{GainSample, NetConfig, ResidualNetwork};
    use ris_nulling::weights::{chain_rng, WeightVector};

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for draw in 0..draws {
        let config = NetConfig {
            width: 8,
            blocks: 2,
            include_gain_feature: draw % 2 == 1,
        };
        let mut rng = chain_rng(draw, 0);
        let n = rng.gen_range(1..=6);
        let mut net = ResidualNetwork::new(n, 4, config, draw).unwrap();
        for p in net.parameters_mut() {
            *p += rng.gen_range(-0.3..0.3);
        }
        let batch: Vec<GainSample> = (0..8)
            .map(|_| {
                let w = WeightVector::random(n, 4, &mut rng).unwrap();
                let g = rng.gen_range(-3.0..3.0);
                GainSample::new(w, g, g + rng.gen_range(-2.0..2.0))
            })
            .collect();
        let analytic = net.gradient(&batch).unwrap();
        for (i, &a) in analytic.iter().enumerate() {
            let orig = net.parameters()[i];
            net.parameters_mut()[i] = orig + h;
            let up = net.loss(&batch).unwrap();
            net.parameters_mut()[i] = orig - h;
            let down = net.loss(&batch).unwrap();
            net.parameters_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let scale = a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((a - numeric).abs() / scale);
        }
    }
    worst
}
