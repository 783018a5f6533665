//! Multinomial logistic regression trained by full-batch gradient descent.
//!
//! Minimises `L(W) = −(1/n) Σ ln softmax(Wᵀx̃)_yᵢ + (λ/2)‖W_no-bias‖²`
//! from `W = 0`, halving the step (up to 20 times) whenever a trial step
//! would increase the loss, so the loss is non-increasing across accepted
//! iterations. Logits are max-shifted before exponentiation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{ClassLabel, N_CLASSES};

use super::{Design, argmax_class};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxParams {
    pub learning_rate: f64,
    pub l2_penalty: f64,
    pub max_iters: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SoftmaxParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            l2_penalty: 1e-4,
            max_iters: 500,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SoftmaxFitInfo {
    pub iterations: usize,
    pub final_loss: f64,
    pub final_grad_inf_norm: f64,
    /// True when the gradient norm fell below the tolerance.
    pub converged: bool,
    /// Loss after each accepted step, starting with the loss at `W = 0`.
    pub loss_trace: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SoftmaxModel {
    pub n_features: usize,
    /// `(n_features + 1) × N_CLASSES` row-major; row 0 is the bias.
    pub weights: Vec<f64>,
    pub fit_info: SoftmaxFitInfo,
}

/// Loss and gradient at `w`; the gradient buffer is `(d+1) × N_CLASSES`.
/// Exposed so the gradient can be verified against finite differences.
pub fn loss_and_gradient(
    design: Design<'_>,
    codes: &[usize],
    w: &[f64],
    l2_penalty: f64,
) -> (f64, Vec<f64>) {
    let d = design.n_features();
    let n = design.n_rows() as f64;
    let mut grad = vec![0.0; (d + 1) * N_CLASSES];
    let mut loss = 0.0;

    for r in 0..design.n_rows() {
        let row = design.row(r);
        let mut logits = [0.0; N_CLASSES];
        for (c, logit) in logits.iter_mut().enumerate() {
            let mut z = w[c]; // bias row
            for (j, &x) in row.iter().enumerate() {
                z += w[(j + 1) * N_CLASSES + c] * x;
            }
            *logit = z;
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum_exp = 0.0;
        let mut probs = [0.0; N_CLASSES];
        for (p, &z) in probs.iter_mut().zip(&logits) {
            *p = (z - max).exp();
            sum_exp += *p;
        }
        for p in &mut probs {
            *p /= sum_exp;
        }
        // ln p_y via log-sum-exp keeps extreme logits finite.
        loss -= logits[codes[r]] - max - sum_exp.ln();

        for c in 0..N_CLASSES {
            let g = probs[c] - if codes[r] == c { 1.0 } else { 0.0 };
            grad[c] += g;
            for (j, &x) in row.iter().enumerate() {
                grad[(j + 1) * N_CLASSES + c] += g * x;
            }
        }
    }

    loss /= n;
    for g in &mut grad {
        *g /= n;
    }
    // L2 on everything but the bias row.
    let mut penalty = 0.0;
    for (i, weight) in w.iter().enumerate().skip(N_CLASSES) {
        penalty += weight * weight;
        grad[i] += l2_penalty * weight;
    }
    loss += 0.5 * l2_penalty * penalty;
    (loss, grad)
}

/// Loss alone, used for step-halving trials and finite-difference checks.
pub fn loss_only(design: Design<'_>, codes: &[usize], w: &[f64], l2_penalty: f64) -> f64 {
    let n = design.n_rows() as f64;
    let mut loss = 0.0;
    for r in 0..design.n_rows() {
        let row = design.row(r);
        let mut logits = [0.0; N_CLASSES];
        for (c, logit) in logits.iter_mut().enumerate() {
            let mut z = w[c];
            for (j, &x) in row.iter().enumerate() {
                z += w[(j + 1) * N_CLASSES + c] * x;
            }
            *logit = z;
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = logits.iter().map(|&z| (z - max).exp()).sum();
        loss -= logits[codes[r]] - max - sum_exp.ln();
    }
    loss /= n;
    let penalty: f64 = w.iter().skip(N_CLASSES).map(|x| x * x).sum();
    loss + 0.5 * l2_penalty * penalty
}

pub fn train(
    design: Design<'_>,
    labels: &[ClassLabel],
    params: &SoftmaxParams,
) -> Result<SoftmaxModel> {
    if design.n_rows() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    let codes: Vec<usize> = labels.iter().map(|l| l.code()).collect();
    let d = design.n_features();
    let mut w = vec![0.0; (d + 1) * N_CLASSES];

    let (mut loss, mut grad) = loss_and_gradient(design, &codes, &w, params.l2_penalty);
    let mut loss_trace = vec![loss];
    let mut iterations = 0;
    let mut converged = false;

    for iter in 0..params.max_iters {
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: iter });
        }
        let grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if grad_norm < params.tolerance {
            converged = true;
            break;
        }

        let mut step = params.learning_rate;
        let mut accepted = None;
        for _ in 0..=20 {
            let trial: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi - step * gi).collect();
            let trial_loss = loss_only(design, &codes, &trial, params.l2_penalty);
            if trial_loss <= loss {
                accepted = Some((trial, trial_loss));
                break;
            }
            step /= 2.0;
        }
        let Some((next, _)) = accepted else {
            // 20 halvings without improvement: stop at the current point.
            break;
        };
        w = next;
        iterations = iter + 1;
        (loss, grad) = loss_and_gradient(design, &codes, &w, params.l2_penalty);
        loss_trace.push(loss);
    }

    let final_grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            iteration: iterations,
        });
    }
    Ok(SoftmaxModel {
        n_features: d,
        weights: w,
        fit_info: SoftmaxFitInfo {
            iterations,
            final_loss: loss,
            final_grad_inf_norm: final_grad_norm,
            converged,
            loss_trace,
        },
    })
}

/// Class probabilities for each row; rows sum to 1 within 1e-12.
pub fn probabilities(model: &SoftmaxModel, design: Design<'_>) -> Result<Vec<[f64; N_CLASSES]>> {
    if design.n_features() != model.n_features {
        return Err(Error::DimensionMismatch {
            expected: model.n_features,
            got: design.n_features(),
        });
    }
    Ok((0..design.n_rows())
        .map(|r| {
            let row = design.row(r);
            let mut logits = [0.0; N_CLASSES];
            for (c, logit) in logits.iter_mut().enumerate() {
                let mut z = model.weights[c];
                for (j, &x) in row.iter().enumerate() {
                    z += model.weights[(j + 1) * N_CLASSES + c] * x;
                }
                *logit = z;
            }
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut probs = [0.0; N_CLASSES];
            let mut sum = 0.0;
            for (p, &z) in probs.iter_mut().zip(&logits) {
                *p = (z - max).exp();
                sum += *p;
            }
            for p in &mut probs {
                *p /= sum;
            }
            probs
        })
        .collect())
}

pub fn predict(
    model: &SoftmaxModel,
    design: Design<'_>,
) -> Result<(Vec<ClassLabel>, Vec<[f64; N_CLASSES]>)> {
    let probs = probabilities(model, design)?;
    let labels = probs.iter().map(argmax_class).collect();
    Ok((labels, probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_instance(seed: u64, n: usize, d: usize) -> (Vec<f64>, Vec<ClassLabel>) {
        let mut rng = Rng::new(seed);
        let values: Vec<f64> = (0..n * d).map(|_| rng.next_gaussian()).collect();
        let labels: Vec<ClassLabel> = (0..n)
            .map(|_| ClassLabel::from_code(rng.below(3)).unwrap())
            .collect();
        (values, labels)
    }

    #[test]
    fn zero_weights_give_uniform_probabilities_and_tie_rule() {
        let model = SoftmaxModel {
            n_features: 4,
            weights: vec![0.0; 5 * N_CLASSES],
            fit_info: SoftmaxFitInfo {
                iterations: 0,
                final_loss: 0.0,
                final_grad_inf_norm: 0.0,
                converged: false,
                loss_trace: vec![],
            },
        };
        let values = [0.5, -1.0, 2.0, 0.0];
        let (labels, probs) = predict(&model, Design::new(&values, 1, 4)).unwrap();
        for p in &probs[0] {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(labels[0], ClassLabel::Attack); // lowest code wins the tie
    }

    #[test]
    fn logit_shift_invariance() {
        let mut rng = Rng::new(4);
        let mut weights: Vec<f64> = (0..5 * N_CLASSES).map(|_| rng.next_gaussian()).collect();
        let base = SoftmaxModel {
            n_features: 4,
            weights: weights.clone(),
            fit_info: SoftmaxFitInfo {
                iterations: 0,
                final_loss: 0.0,
                final_grad_inf_norm: 0.0,
                converged: false,
                loss_trace: vec![],
            },
        };
        // Adding a constant to every class bias shifts all logits equally.
        for bias in weights.iter_mut().take(N_CLASSES) {
            *bias += 123.456;
        }
        let shifted = SoftmaxModel {
            weights,
            ..base.clone()
        };
        let values: Vec<f64> = (0..40).map(|_| rng.next_gaussian()).collect();
        let design = Design::new(&values, 10, 4);
        let a = probabilities(&base, design).unwrap();
        let b = probabilities(&shifted, design).unwrap();
        for (pa, pb) in a.iter().zip(&b) {
            for c in 0..N_CLASSES {
                assert!((pa[c] - pb[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn probabilities_match_direct_exp_normalise_oracle() {
        let mut rng = Rng::new(8);
        let weights: Vec<f64> = (0..4 * N_CLASSES).map(|_| rng.next_gaussian()).collect();
        let model = SoftmaxModel {
            n_features: 3,
            weights: weights.clone(),
            fit_info: SoftmaxFitInfo {
                iterations: 0,
                final_loss: 0.0,
                final_grad_inf_norm: 0.0,
                converged: false,
                loss_trace: vec![],
            },
        };
        let values: Vec<f64> = (0..150).map(|_| rng.next_gaussian()).collect();
        let design = Design::new(&values, 50, 3);
        let probs = probabilities(&model, design).unwrap();
        for (r, row_probs) in probs.iter().enumerate() {
            let row = design.row(r);
            // Oracle: raw exp / sum, no max shift (safe at this scale).
            let logits: Vec<f64> = (0..N_CLASSES)
                .map(|c| {
                    weights[c]
                        + row
                            .iter()
                            .enumerate()
                            .map(|(j, &x)| weights[(j + 1) * N_CLASSES + c] * x)
                            .sum::<f64>()
                })
                .collect();
            let sum: f64 = logits.iter().map(|z| z.exp()).sum();
            for c in 0..N_CLASSES {
                assert!((row_probs[c] - logits[c].exp() / sum).abs() < 1e-12);
            }
            assert!((row_probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let (values, labels) = random_instance(15, 10, 4);
        let design = Design::new(&values, 10, 4);
        let codes: Vec<usize> = labels.iter().map(|l| l.code()).collect();
        let mut rng = Rng::new(16);
        let w: Vec<f64> = (0..5 * N_CLASSES)
            .map(|_| rng.next_gaussian() * 0.5)
            .collect();
        let l2 = 1e-3;
        let (_, grad) = loss_and_gradient(design, &codes, &w, l2);

        let h = 1e-5;
        for i in 0..w.len() {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[i] += h;
            wm[i] -= h;
            let numeric = (loss_only(design, &codes, &wp, l2) - loss_only(design, &codes, &wm, l2))
                / (2.0 * h);
            let denom = numeric.abs().max(grad[i].abs()).max(1e-8);
            assert!(
                ((grad[i] - numeric) / denom).abs() < 1e-4,
                "weight {i}: analytic {} vs numeric {numeric}",
                grad[i]
            );
        }
    }

    #[test]
    fn separable_two_class_problem_reaches_full_accuracy() {
        // Two clusters on a line, classes Attack / Natural.
        let mut values = Vec::new();
        let mut labels = Vec::new();
        let mut rng = Rng::new(3);
        for i in 0..40 {
            let class = i % 2;
            values.push(if class == 0 { -2.0 } else { 2.0 } + 0.3 * rng.next_gaussian());
            labels.push(ClassLabel::from_code(class).unwrap());
        }
        let design = Design::new(&values, 40, 1);
        let model = train(design, &labels, &SoftmaxParams::default()).unwrap();
        let (preds, _) = predict(&model, design).unwrap();
        assert_eq!(preds, labels);
        assert!(model.fit_info.iterations <= 500);
    }

    #[test]
    fn loss_trace_is_non_increasing() {
        let (values, labels) = random_instance(21, 60, 5);
        let design = Design::new(&values, 60, 5);
        let model = train(design, &labels, &SoftmaxParams::default()).unwrap();
        let trace = &model.fit_info.loss_trace;
        assert!(!trace.is_empty());
        for pair in trace.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-15,
                "loss increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
        assert!(model.fit_info.final_grad_inf_norm.is_finite());
    }

    #[test]
    fn heavy_regularisation_crushes_non_bias_weights() {
        let (values, labels) = random_instance(30, 50, 3);
        let design = Design::new(&values, 50, 3);
        let params = SoftmaxParams {
            l2_penalty: 1e6,
            ..Default::default()
        };
        let model = train(design, &labels, &params).unwrap();
        let non_bias_norm: f64 = model
            .weights
            .iter()
            .skip(N_CLASSES)
            .map(|w| w * w)
            .sum::<f64>()
            .sqrt();
        assert!(non_bias_norm < 1e-2, "non-bias norm {non_bias_norm}");
        // All predictions collapse to the bias-favoured class.
        let (preds, _) = predict(&model, design).unwrap();
        let first = preds[0];
        assert!(preds.iter().all(|&p| p == first));
    }

    #[test]
    fn permuting_queries_permutes_predictions() {
        let (values, labels) = random_instance(40, 80, 3);
        let design = Design::new(&values, 80, 3);
        let model = train(design, &labels, &SoftmaxParams::default()).unwrap();
        let (forward, _) = predict(&model, design).unwrap();
        let mut permuted = Vec::with_capacity(values.len());
        for r in (0..80).rev() {
            permuted.extend_from_slice(&values[r * 3..(r + 1) * 3]);
        }
        let (backward, _) = predict(&model, Design::new(&permuted, 80, 3)).unwrap();
        let mut backward_reversed = backward;
        backward_reversed.reverse();
        assert_eq!(forward, backward_reversed);
    }

    #[test]
    fn wild_inputs_raise_non_finite_loss() {
        let values = vec![1e308, -1e308, 1e308, -1e308];
        let labels = vec![ClassLabel::Attack, ClassLabel::Natural];
        let design = Design::new(&values, 2, 2);
        let params = SoftmaxParams {
            learning_rate: 1e300,
            ..Default::default()
        };
        let result = train(design, &labels, &params);
        // Either the loss blows up (error) or halving rescues the step; both
        // are acceptable, but a blow-up must be reported as NonFiniteLoss.
        if let Err(e) = result {
            assert!(matches!(e, Error::NonFiniteLoss { .. }));
        }
    }
}
