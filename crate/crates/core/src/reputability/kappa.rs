use crate::error::{Error, Result};

/// Fleiss' kappa for `ratings[item][category]` = number of raters who put
/// the item in the category. Every item must have the same number (≥ 2) of
/// raters. When every rating falls in a single category agreement is
/// perfect and 1 is returned.
pub fn fleiss_kappa(ratings: &[Vec<usize>]) -> Result<f64> {
    let first = ratings
        .first()
        .ok_or_else(|| Error::InvalidInput("no rated items".into()))?;
    let k = first.len();
    let n: usize = first.iter().sum();
    if n < 2 {
        return Err(Error::InvalidInput(
            "at least two raters are required".into(),
        ));
    }
    for (i, row) in ratings.iter().enumerate() {
        if row.len() != k || row.iter().sum::<usize>() != n {
            return Err(Error::InvalidInput(format!(
                "ragged rating matrix at item {i}"
            )));
        }
    }
    let items = ratings.len() as f64;
    let nf = n as f64;
    let p_bar = ratings
        .iter()
        .map(|row| {
            let sq: usize = row.iter().map(|c| c * c).sum();
            (sq as f64 - nf) / (nf * (nf - 1.0))
        })
        .sum::<f64>()
        / items;
    let p_e: f64 = (0..k)
        .map(|j| {
            let pj = ratings.iter().map(|row| row[j]).sum::<usize>() as f64 / (items * nf);
            pj * pj
        })
        .sum();
    if (1.0 - p_e).abs() < f64::EPSILON {
        return Ok(1.0);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_agreement() {
        assert_eq!(fleiss_kappa(&[vec![3, 0], vec![0, 3]]).unwrap(), 1.0);
        assert_eq!(fleiss_kappa(&[vec![0, 2, 0], vec![0, 2, 0]]).unwrap(), 1.0);
    }

    #[test]
    fn one_disagreement() {
        // P̄ = 2/3, P̄e = 1/2
        let k = fleiss_kappa(&[vec![2, 0], vec![0, 2], vec![1, 1]]).unwrap();
        assert!((k - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn wikipedia_example() {
        // Fleiss (1971)-style worked example, 10 items × 14 raters × 5 categories
        let table = vec![
            vec![0, 0, 0, 0, 14],
            vec![0, 2, 6, 4, 2],
            vec![0, 0, 3, 5, 6],
            vec![0, 3, 9, 2, 0],
            vec![2, 2, 8, 1, 1],
            vec![7, 7, 0, 0, 0],
            vec![3, 2, 6, 3, 0],
            vec![2, 5, 3, 2, 2],
            vec![6, 5, 2, 1, 0],
            vec![0, 2, 2, 3, 7],
        ];
        let k = fleiss_kappa(&table).unwrap();
        assert!((k - 0.210).abs() < 1e-3);
    }

    #[test]
    fn errors() {
        assert!(fleiss_kappa(&[]).is_err());
        assert!(fleiss_kappa(&[vec![1, 0]]).is_err());
        assert!(fleiss_kappa(&[vec![2, 0], vec![1, 0]]).is_err());
        assert!(fleiss_kappa(&[vec![2, 0], vec![1, 1, 0]]).is_err());
    }
}
