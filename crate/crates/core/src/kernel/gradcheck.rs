use super::tape::{Tape, Var};
use super::tensor::Tensor;
use super::KernelError;

/// Denominator floor for the relative error, so entries whose true gradient is
/// ~0 are judged on absolute error instead.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// `(parameter index, flat entry)` of the worst entry.
    pub worst_entry: Option<(usize, usize)>,
    pub entries_checked: usize,
    pub tolerance: f64,
    pub passed: bool,
}

fn evaluate<F>(f: &mut F, params: &[Tensor<f64>]) -> Result<(Tape<f64>, Vec<Var>, Var), KernelError>
where
    F: FnMut(&mut Tape<f64>, &[Var]) -> Result<Var, KernelError>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let loss = f(&mut tape, &vars)?;
    Ok((tape, vars, loss))
}

fn scalar_of<F>(f: &mut F, params: &[Tensor<f64>]) -> Result<f64, KernelError>
where
    F: FnMut(&mut Tape<f64>, &[Var]) -> Result<Var, KernelError>,
{
    let (tape, _, loss) = evaluate(f, params)?;
    let v = tape.value(loss);
    if v.len() != 1 {
        return Err(KernelError::NotScalar(v.shape().to_vec()));
    }
    Ok(v.item())
}

/// Compares reverse-mode gradients of `f` against central differences
/// `(f(θ+ε) − f(θ−ε)) / 2ε` for every entry of every parameter.
///
/// `f` records its computation on the supplied tape, reading parameters through
/// the given vars, and returns the scalar loss.
pub fn grad_check<F>(
    mut f: F,
    params: &[Tensor<f64>],
    epsilon: f64,
    tolerance: f64,
) -> Result<GradCheckReport, KernelError>
where
    F: FnMut(&mut Tape<f64>, &[Var]) -> Result<Var, KernelError>,
{
    assert!(epsilon > 0.0, "epsilon must be positive");
    let (tape, vars, loss) = evaluate(&mut f, params)?;
    let base = tape.value(loss).item();
    let again = scalar_of(&mut f, params)?;
    if base.to_bits() != again.to_bits() {
        return Err(KernelError::NonDeterministic {
            first: base,
            second: again,
        });
    }
    let grads = tape.backward(loss)?;

    let mut work: Vec<Tensor<f64>> = params.to_vec();
    let mut max_err = 0.0f64;
    let mut worst = None;
    let mut checked = 0;
    for (pi, var) in vars.iter().enumerate() {
        let analytic = grads.get(*var);
        for e in 0..params[pi].len() {
            let orig = params[pi].data()[e];
            work[pi].data_mut()[e] = orig + epsilon;
            let plus = scalar_of(&mut f, &work)?;
            work[pi].data_mut()[e] = orig - epsilon;
            let minus = scalar_of(&mut f, &work)?;
            work[pi].data_mut()[e] = orig;

            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = analytic.data()[e];
            let denom = a.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
            let err = (a - numeric).abs() / denom;
            if err > max_err || worst.is_none() {
                max_err = max_err.max(err);
                worst = Some((pi, e));
            }
            checked += 1;
        }
    }
    Ok(GradCheckReport {
        max_relative_error: max_err,
        worst_entry: worst,
        entries_checked: checked,
        tolerance,
        passed: max_err <= tolerance,
    })
}
