//! Browser demo. Each exported function takes a JSON request and returns a
//! JSON response so the page needs no generated bindings beyond strings.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use ranpredict::dataset::{build_task, fit_scaler, split_train_test, Target, TaskSpec};
use ranpredict::importance::gain_importance;
use ranpredict::metrics::{evaluate, mse};
use ranpredict::regressors::{
    fit_boosted_leafwise, fit_boosted_second_order, fit_forest, fit_linear, fit_tree, predict, ForestParams,
    LeafwiseParams, Model, ModelKind, SecondOrderParams, TreeParams,
};
use ranpredict::synthgen::{generate, GenConfig};

#[derive(Deserialize)]
#[serde(default)]
pub struct PreviewRequest {
    pub n_samples: usize,
    pub seed: u64,
    pub snr_mean_db: f64,
    pub snr_std_db: f64,
    pub noise_std_kbps: f64,
}

impl Default for PreviewRequest {
    fn default() -> Self {
        let g = GenConfig::default();
        Self {
            n_samples: 1500,
            seed: g.seed,
            snr_mean_db: g.snr_mean_db,
            snr_std_db: g.snr_std_db,
            noise_std_kbps: g.noise_std_kbps,
        }
    }
}

impl PreviewRequest {
    fn gen_config(&self) -> GenConfig {
        GenConfig {
            n_samples: self.n_samples,
            seed: self.seed,
            snr_mean_db: self.snr_mean_db,
            snr_std_db: self.snr_std_db,
            noise_std_kbps: self.noise_std_kbps,
            ..GenConfig::default()
        }
    }
}

#[derive(Serialize)]
pub struct Preview {
    pub snr_db: Vec<f64>,
    pub brate_kbps: Vec<f64>,
    pub mcs: Vec<u8>,
}

pub fn synth_preview(req: &PreviewRequest) -> Result<Preview, String> {
    let records = generate(&req.gen_config()).map_err(|e| e.to_string())?;
    Ok(Preview {
        snr_db: records.iter().map(|r| r.snr_db).collect(),
        brate_kbps: records.iter().map(|r| r.brate_kbps).collect(),
        mcs: records.iter().map(|r| r.mcs).collect(),
    })
}

#[derive(Deserialize)]
#[serde(default)]
pub struct CurveRequest {
    pub data: PreviewRequest,
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub max_depth: usize,
}

impl Default for CurveRequest {
    fn default() -> Self {
        Self {
            data: PreviewRequest::default(),
            n_rounds: 100,
            learning_rate: 0.1,
            lambda: 1.0,
            max_depth: 4,
        }
    }
}

/// Train and test MSE after each boosting round; index 0 is the base score alone.
#[derive(Serialize)]
pub struct Curve {
    pub train_mse: Vec<f64>,
    pub test_mse: Vec<f64>,
}

pub fn boosting_curve(req: &CurveRequest) -> Result<Curve, String> {
    let records = generate(&req.data.gen_config()).map_err(|e| e.to_string())?;
    let (x, y) = build_task(&records, &TaskSpec::new(Target::Brate)).map_err(|e| e.to_string())?;
    let s = split_train_test(&x, &y, 0.8, req.data.seed).map_err(|e| e.to_string())?;
    let params = SecondOrderParams {
        n_rounds: req.n_rounds,
        learning_rate: req.learning_rate,
        lambda: req.lambda,
        max_depth: Some(req.max_depth),
        ..Default::default()
    };
    let model = fit_boosted_second_order(&s.x_train, &s.y_train, &params).map_err(|e| e.to_string())?;

    let staged = |rows: Vec<&[f64]>, target: &[f64]| -> Result<Vec<f64>, String> {
        let mut pred = vec![model.base_score; target.len()];
        let mut curve = vec![mse(target, &pred).map_err(|e| e.to_string())?];
        for tree in &model.trees {
            for (p, row) in pred.iter_mut().zip(&rows) {
                *p += model.learning_rate * tree.predict_row(row);
            }
            curve.push(mse(target, &pred).map_err(|e| e.to_string())?);
        }
        Ok(curve)
    };
    Ok(Curve {
        train_mse: staged(s.x_train.rows().collect(), &s.y_train.values)?,
        test_mse: staged(s.x_test.rows().collect(), &s.y_test.values)?,
    })
}

#[derive(Deserialize)]
#[serde(default)]
pub struct CompareRequest {
    pub data: PreviewRequest,
    pub task: Target,
}

impl Default for CompareRequest {
    fn default() -> Self {
        Self {
            data: PreviewRequest::default(),
            task: Target::Brate,
        }
    }
}

#[derive(Serialize)]
pub struct ModelScore {
    pub model: String,
    pub mse: f64,
    pub rmse: f64,
    pub r2: f64,
    pub fit_ms: f64,
    /// (feature, share), largest first. Empty for the linear model.
    pub importance: Vec<(String, f64)>,
}

/// Fits all five model kinds with small budgets so it stays interactive.
pub fn compare_models(req: &CompareRequest, now_ms: impl Fn() -> f64) -> Result<Vec<ModelScore>, String> {
    let records = generate(&req.data.gen_config()).map_err(|e| e.to_string())?;
    let (x, y) = build_task(&records, &TaskSpec::new(req.task)).map_err(|e| e.to_string())?;
    let s = split_train_test(&x, &y, 0.8, req.data.seed).map_err(|e| e.to_string())?;
    let scaler = fit_scaler(&s.x_train).map_err(|e| e.to_string())?;
    let x_train = scaler.transform(&s.x_train).map_err(|e| e.to_string())?;
    let x_test = scaler.transform(&s.x_test).map_err(|e| e.to_string())?;
    let (xt, yt) = (&x_train, &s.y_train);

    let mut scores = Vec::new();
    for kind in ModelKind::ALL {
        let start = now_ms();
        let model = match kind {
            ModelKind::Linear => fit_linear(xt, yt).map(Model::Linear),
            ModelKind::Tree => fit_tree(xt, yt, &TreeParams::default()).map(Model::Tree),
            ModelKind::Forest => fit_forest(
                xt,
                yt,
                &ForestParams {
                    n_trees: 30,
                    seed: req.data.seed,
                    ..Default::default()
                },
            )
            .map(Model::Forest),
            ModelKind::XgbLike => fit_boosted_second_order(
                xt,
                yt,
                &SecondOrderParams {
                    n_rounds: 60,
                    learning_rate: 0.2,
                    max_depth: Some(4),
                    ..Default::default()
                },
            )
            .map(Model::Boosted),
            ModelKind::LgbmLike => fit_boosted_leafwise(
                xt,
                yt,
                &LeafwiseParams {
                    n_rounds: 60,
                    learning_rate: 0.2,
                    ..Default::default()
                },
            )
            .map(Model::Boosted),
        }
        .map_err(|e| e.to_string())?;
        let fit_ms = now_ms() - start;
        let y_hat = predict(&model, &x_test).map_err(|e| e.to_string())?;
        let r = evaluate(&s.y_test.values, &y_hat.values).map_err(|e| e.to_string())?;
        let importance = match gain_importance(&model) {
            Ok(report) => report.ranked().into_iter().map(|f| (f.name.clone(), f.share)).collect(),
            Err(_) => Vec::new(),
        };
        scores.push(ModelScore {
            model: kind.name().to_string(),
            mse: r.mse,
            rmse: r.rmse,
            r2: r.r2,
            fit_ms,
            importance,
        });
    }
    Ok(scores)
}

fn respond<Req, Resp>(request: &str, op: impl FnOnce(&Req) -> Result<Resp, String>) -> Result<String, JsError>
where
    Req: for<'de> Deserialize<'de>,
    Resp: Serialize,
{
    let req: Req = serde_json::from_str(request).map_err(|e| JsError::new(&format!("bad request: {e}")))?;
    let resp = op(&req).map_err(|e| JsError::new(&e))?;
    Ok(serde_json::to_string(&resp).expect("response serializes"))
}

#[wasm_bindgen(js_name = synthPreview)]
pub fn synth_preview_js(request: &str) -> Result<String, JsError> {
    respond(request, synth_preview)
}

#[wasm_bindgen(js_name = boostingCurve)]
pub fn boosting_curve_js(request: &str) -> Result<String, JsError> {
    respond(request, boosting_curve)
}

#[wasm_bindgen]
extern "C" {
    #[wasm_bindgen(js_namespace = Date)]
    fn now() -> f64;
}

#[wasm_bindgen(js_name = compareModels)]
pub fn compare_models_js(request: &str) -> Result<String, JsError> {
    respond(request, |req| compare_models(req, now))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preview_has_one_point_per_sample() {
        let p = synth_preview(&PreviewRequest {
            n_samples: 50,
            ..Default::default()
        })
        .unwrap();
        assert_eq!((p.snr_db.len(), p.brate_kbps.len(), p.mcs.len()), (50, 50, 50));
    }

    #[test]
    fn curve_starts_at_base_score_and_falls() {
        let c = boosting_curve(&CurveRequest {
            data: PreviewRequest {
                n_samples: 400,
                ..Default::default()
            },
            n_rounds: 20,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(c.train_mse.len(), c.test_mse.len());
        assert!(c.train_mse.len() <= 21);
        assert!(c.train_mse.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn comparison_covers_all_models() {
        let req = CompareRequest {
            data: PreviewRequest {
                n_samples: 300,
                ..Default::default()
            },
            task: Target::Snr,
        };
        let scores = compare_models(&req, || 0.0).unwrap();
        assert_eq!(scores.len(), 5);
        assert!(scores[0].importance.is_empty());
        assert!(scores[1..].iter().all(|s| !s.importance.is_empty()));
    }

    #[test]
    fn requests_fill_defaults() {
        let req: CurveRequest = serde_json::from_str(r#"{"n_rounds": 5, "data": {"n_samples": 10}}"#).unwrap();
        assert_eq!((req.n_rounds, req.max_depth, req.data.n_samples), (5, 4, 10));
    }
}
