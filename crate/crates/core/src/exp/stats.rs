use statrs::distribution::{Binomial, DiscreteCDF};

/// Paired sign test of `a > b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    /// One-sided `P(X ≥ wins)` for `X ~ Bin(wins + losses, 1/2)`; 1 when
    /// every pair ties.
    pub p_value: f64,
}

pub fn sign_test(a: &[f64], b: &[f64]) -> SignTest {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let wins = a.iter().zip(b).filter(|(x, y)| x > y).count();
    let losses = a.iter().zip(b).filter(|(x, y)| x < y).count();
    let ties = a.len() - wins - losses;
    let n = (wins + losses) as u64;
    let p_value = if n == 0 || wins == 0 {
        1.0
    } else {
        let bin = Binomial::new(0.5, n).expect("valid binomial");
        bin.sf(wins as u64 - 1)
    };
    SignTest { wins, losses, ties, p_value }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_wins() {
        let t = sign_test(&[2.0; 10], &[1.0; 10]);
        assert_eq!((t.wins, t.losses, t.ties), (10, 0, 0));
        assert!((t.p_value - 0.5f64.powi(10)).abs() < 1e-15);
    }

    #[test]
    fn ties_are_dropped() {
        let t = sign_test(&[1.0, 2.0, 3.0], &[1.0, 1.0, 4.0]);
        assert_eq!((t.wins, t.losses, t.ties), (1, 1, 1));
        assert!((t.p_value - 0.75).abs() < 1e-12);
        assert_eq!(sign_test(&[1.0], &[1.0]).p_value, 1.0);
    }
}
