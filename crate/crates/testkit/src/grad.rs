//! Central finite differences over model parameters.

use hybridgnn::model::ModelParams;

/// A scalar inside the parameter set: tensor position in canonical order,
/// then the flat index inside that tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Coord {
    pub tensor: usize,
    pub index: usize,
}

pub fn get(params: &ModelParams, c: Coord) -> f64 {
    params.tensors.list()[c.tensor].as_slice()[c.index]
}

pub fn set(params: &mut ModelParams, c: Coord, value: f64) {
    params.tensors.list_mut()[c.tensor].as_mut_slice()[c.index] = value;
}

/// `(f(x + h) - f(x - h)) / 2h` along one coordinate.
pub fn central_difference(params: &ModelParams, c: Coord, h: f64, mut f: impl FnMut(&ModelParams) -> f64) -> f64 {
    let mut p = params.clone();
    let x = get(params, c);
    set(&mut p, c, x + h);
    let plus = f(&p);
    set(&mut p, c, x - h);
    let minus = f(&p);
    (plus - minus) / (2.0 * h)
}

/// `|a - b| / max(|a|, |b|, floor)`; the floor keeps near-zero pairs from
/// dominating.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
