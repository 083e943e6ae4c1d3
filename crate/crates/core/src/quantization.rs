//! Residual integerisation with a per-cluster step size.

use crate::error::{Error, Result};
use crate::geometry::SensorGeometry;
use crate::range_image::ResidualPlane;
use crate::salience::SalienceMap;
use crate::segmentation::{ClusterAssignment, UNLABELED};
use crate::varint::{put_ivarint, Reader};

/// Integer residual codes in row-major valid-pixel order, with the step
/// size of every label (index 0 = ground).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedResiduals {
    pub codes: Vec<i64>,
    pub accuracies: Vec<f64>,
}

/// `round(residual / accuracy)`, half away from zero.
#[inline]
pub fn quantize_value(residual: f64, accuracy: f64) -> i64 {
    (residual / accuracy).round() as i64
}

#[inline]
pub fn dequantize_value(code: i64, accuracy: f64) -> f64 {
    code as f64 * accuracy
}

fn check_accuracies(acc: &[f64]) -> Result<()> {
    if let Some(a) = acc.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::Config(format!("quantization accuracy {a} is not positive")));
    }
    Ok(())
}

pub fn quantize(
    residual: &ResidualPlane,
    salience: &SalienceMap,
    assignment: &ClusterAssignment,
) -> Result<QuantizedResiduals> {
    let accuracies = salience.accuracies();
    check_accuracies(&accuracies)?;
    let mut codes = Vec::new();
    for (i, (&v, &valid)) in residual.values().iter().zip(residual.valid_mask()).enumerate() {
        if !valid {
            continue;
        }
        let label = assignment.labels[i];
        if label == UNLABELED {
            return Err(Error::Shape(format!("valid pixel {i} has no cluster")));
        }
        codes.push(quantize_value(v, accuracies[label as usize]));
    }
    Ok(QuantizedResiduals { codes, accuracies })
}

pub fn dequantize(
    q: &QuantizedResiduals,
    salience: &SalienceMap,
    assignment: &ClusterAssignment,
    geom: &SensorGeometry,
) -> Result<ResidualPlane> {
    let accuracies = salience.accuracies();
    if accuracies != q.accuracies {
        return Err(Error::Shape("accuracy table does not match the encoder's".into()));
    }
    let mut values = vec![0.0; assignment.labels.len()];
    let valid: Vec<bool> = assignment.labels.iter().map(|l| *l != UNLABELED).collect();
    let mut codes = q.codes.iter();
    for (i, &l) in assignment.labels.iter().enumerate() {
        if l == UNLABELED {
            continue;
        }
        let code =
            codes.next().ok_or_else(|| Error::Shape("fewer residual codes than valid pixels".into()))?;
        values[i] = dequantize_value(*code, accuracies[l as usize]);
    }
    if codes.next().is_some() {
        return Err(Error::Shape("more residual codes than valid pixels".into()));
    }
    ResidualPlane::from_parts(*geom, values, valid)
}

/// Zig-zag varint serialisation of the code stream.
pub fn encode_codes(codes: &[i64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(codes.len());
    for c in codes {
        put_ivarint(&mut out, *c);
    }
    out
}

pub fn decode_codes(bytes: &[u8], count: usize) -> Result<Vec<i64>> {
    let mut r = Reader::new(bytes);
    let codes = (0..count).map(|_| r.ivarint()).collect::<Result<Vec<_>>>()?;
    if !r.is_at_end() {
        return Err(Error::Decode(format!("{} trailing residual bytes", r.remaining())));
    }
    Ok(codes)
}
