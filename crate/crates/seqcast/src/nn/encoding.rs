use crate::error::Error;
use crate::Result;

/// Sinusoidal positional encoding, row-major `seq_len x d_model`:
/// `PE[pos, 2i] = sin(pos / 10000^(2i/d_model))`,
/// `PE[pos, 2i+1] = cos(pos / 10000^(2i/d_model))`.
pub fn positional_encoding(seq_len: usize, d_model: usize) -> Result<Vec<f64>> {
    if d_model == 0 || d_model % 2 != 0 {
        return Err(Error::Config(format!(
            "positional encoding needs an even d_model, got {d_model}"
        )));
    }
    let mut pe = vec![0.0; seq_len * d_model];
    for pos in 0..seq_len {
        for i in 0..d_model / 2 {
            let rate = 1.0 / 10000f64.powf(2.0 * i as f64 / d_model as f64);
            let angle = pos as f64 * rate;
            pe[pos * d_model + 2 * i] = angle.sin();
            pe[pos * d_model + 2 * i + 1] = angle.cos();
        }
    }
    Ok(pe)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_row_alternates_zero_one() {
        let pe = positional_encoding(3, 8).unwrap();
        for i in 0..4 {
            assert_eq!(pe[2 * i], 0.0);
            assert_eq!(pe[2 * i + 1], 1.0);
        }
    }

    #[test]
    fn second_position_first_column_is_sin_one() {
        for d in [2, 8, 64] {
            let pe = positional_encoding(2, d).unwrap();
            assert!((pe[d] - 1f64.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn entries_bounded_by_one() {
        let pe = positional_encoding(50, 16).unwrap();
        assert!(pe.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn odd_width_rejected() {
        assert!(matches!(positional_encoding(4, 7), Err(Error::Config(_))));
        assert!(matches!(positional_encoding(4, 0), Err(Error::Config(_))));
    }
}
