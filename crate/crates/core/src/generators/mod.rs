//! Game constructors: the cycling family `G_n`, reference games, and seeded
//! random games.

mod fpg;
mod splitmix;

pub use fpg::{parse_rational, read_game, read_game_file, write_game, write_game_file};
pub use splitmix::SplitMix64;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{fmt_rational, int, to_f64, BimatrixGame, Player, Rational};

/// Parameters of the `4n × 4n` game `G_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GnParams {
    pub n: usize,
    pub alpha: Rational,
    pub beta: Rational,
    /// `(alpha - beta) / (alpha - 1)`, the growth ratio of consecutive blocks.
    pub rho: Rational,
    /// `beta / (alpha - 1)`.
    pub rb: Rational,
    /// Set when `alpha = 1 + 1/k` and `beta = 1 - 1/k²`.
    pub k: Option<Rational>,
    /// `1 - ln k / ln n`, reported for traceability only.
    pub delta_equiv: Option<f64>,
}

impl GnParams {
    /// Parameters from an explicit `(alpha, beta)` pair.
    ///
    /// Returns a warning string when `rho^(n-1) * beta < 1`, the regime in
    /// which the cycling argument no longer applies.
    pub fn with_payoffs(n: usize, alpha: Rational, beta: Rational) -> Result<(Self, Option<String>)> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("n must be at least 2, got {n}")));
        }
        if alpha <= Rational::one() {
            return Err(Error::InvalidParameter(format!(
                "alpha must exceed 1, got {}",
                fmt_rational(&alpha)
            )));
        }
        if !beta.is_positive() || beta >= Rational::one() {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1), got {}",
                fmt_rational(&beta)
            )));
        }
        let excess = &alpha - Rational::one();
        let rho = (&alpha - &beta) / &excess;
        let rb = &beta / &excess;
        // Recover k when the pair is k-coupled.
        let k_candidate = excess.recip();
        let k = (beta == Rational::one() - (&k_candidate * &k_candidate).recip()).then_some(k_candidate);
        let delta_equiv = k.as_ref().map(|k| 1.0 - to_f64(k).ln() / (n as f64).ln());
        let params = GnParams {
            n,
            alpha,
            beta,
            rho,
            rb,
            k,
            delta_equiv,
        };
        let warning = (params.rho_pow(n - 1) * &params.beta < Rational::one()).then(|| {
            format!(
                "rho^(n-1)*beta < 1 for n={n}, alpha={}, beta={}; cycling is not guaranteed",
                fmt_rational(&params.alpha),
                fmt_rational(&params.beta)
            )
        });
        Ok((params, warning))
    }

    pub fn rho_pow(&self, e: usize) -> Rational {
        num_traits::pow(self.rho.clone(), e)
    }

    /// Strategy count of one player, `4n`.
    pub fn size(&self) -> usize {
        4 * self.n
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "n={} alpha={} beta={} rho={} rb={}",
            self.n,
            fmt_rational(&self.alpha),
            fmt_rational(&self.beta),
            fmt_rational(&self.rho),
            fmt_rational(&self.rb)
        );
        if let Some(k) = &self.k {
            s.push_str(&format!(" k={}", fmt_rational(k)));
        }
        if let Some(d) = self.delta_equiv {
            s.push_str(&format!(" delta_equiv={d:.3}"));
        }
        s
    }
}

/// k-coupled parameters: `alpha = 1 + 1/k`, `beta = 1 - 1/k²`.
pub fn gn_params(n: usize, k: &Rational) -> Result<GnParams> {
    if *k <= Rational::one() {
        return Err(Error::InvalidParameter(format!(
            "k must exceed 1, got {}",
            fmt_rational(k)
        )));
    }
    let alpha = Rational::one() + k.recip();
    let beta = Rational::one() - (k * k).recip();
    let (params, _) = GnParams::with_payoffs(n, alpha, beta)?;
    Ok(params)
}

/// Row-player entry of `G_n` at 1-based `(i, j)`; the rules are applied in
/// order and the first match wins.
pub fn gn_entry(params: &GnParams, i: usize, j: usize) -> Rational {
    let n = params.n;
    let size = 4 * n;
    if (2..=n).contains(&i) && j == i - 1 {
        return int(1);
    }
    if (n + 1..=size).contains(&i) && j == i {
        return int(1);
    }
    if (n + 1..=size).contains(&i) && j == i - 1 {
        return params.alpha.clone();
    }
    if i == 2 * n + 1 && j == size {
        return params.alpha.clone();
    }
    if i > j && j <= 2 * n {
        return params.beta.clone();
    }
    if i > j && i - j <= n {
        return params.beta.clone();
    }
    if (3 * n + 1..=size).contains(&j) && i > 2 * n && i + n <= j {
        return params.beta.clone();
    }
    Rational::zero()
}

/// The `4n × 4n` game `G_n`; the column player's matrix is `Rᵀ`.
pub fn build_gn(params: &GnParams) -> BimatrixGame {
    let size = params.size();
    let row: Vec<Vec<Rational>> = (1..=size)
        .map(|i| (1..=size).map(|j| gn_entry(params, i, j)).collect())
        .collect();
    BimatrixGame::symmetric(row).expect("G_n is square and non-empty")
}

/// Recovers `G_n` parameters from a game, if it is exactly some `G_n`.
pub fn recognize_gn(game: &BimatrixGame) -> Option<GnParams> {
    let size = game.rows();
    if size != game.cols() || !size.is_multiple_of(4) || size < 8 {
        return None;
    }
    let n = size / 4;
    // 0-based: alpha at R[n+1, n], beta at R[3, 1] (1-based)
    let alpha = game.payoff(Player::Row, n, n - 1).clone();
    let beta = game.payoff(Player::Row, 2, 0).clone();
    let (params, _) = GnParams::with_payoffs(n, alpha, beta).ok()?;
    (build_gn(&params) == *game).then_some(params)
}

/// Shapley's 3×3 game, which has no pure equilibrium and on which fictitious
/// play cycles.
pub fn build_shapley() -> BimatrixGame {
    let r = [[0, 1, 0], [0, 0, 1], [1, 0, 0]];
    let c = [[0, 0, 1], [1, 0, 0], [0, 1, 0]];
    BimatrixGame::new(int_matrix(&r), int_matrix(&c)).expect("fixed 3x3 game")
}

/// Constant-sum matching pennies.
pub fn build_matching_pennies() -> BimatrixGame {
    let r = [[1, 0], [0, 1]];
    let c = [[0, 1], [1, 0]];
    BimatrixGame::new(int_matrix(&r), int_matrix(&c)).expect("fixed 2x2 game")
}

fn int_matrix<const N: usize>(m: &[[i64; N]]) -> Vec<Vec<Rational>> {
    m.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect()
}

/// Random `m × n` game with entries `k / 2^denom_bits`, `k` uniform on
/// `[0, 2^denom_bits]`, drawn by splitmix64 (row matrix first, row-major,
/// then the column matrix).
pub fn build_random(seed: u64, m: usize, n: usize, denom_bits: u32) -> Result<BimatrixGame> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!("game size {m}x{n} must be positive")));
    }
    if !(1..=30).contains(&denom_bits) {
        return Err(Error::InvalidParameter(format!(
            "denom_bits must be in 1..=30, got {denom_bits}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let den = BigInt::from(1u64 << denom_bits);
    let bound = (1u64 << denom_bits) + 1;
    let draw = |rng: &mut SplitMix64| -> Vec<Vec<Rational>> {
        (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| Rational::new(BigInt::from(rng.below(bound)), den.clone()))
                    .collect()
            })
            .collect()
    };
    let r = draw(&mut rng);
    let c = draw(&mut rng);
    BimatrixGame::new(r, c)
}

/// Exact-parameter banner used by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct GnBanner {
    pub n: usize,
    pub alpha: String,
    pub beta: String,
    pub rho: String,
    pub rb: String,
    pub k: Option<String>,
    pub delta_equiv: Option<f64>,
}

impl From<&GnParams> for GnBanner {
    fn from(p: &GnParams) -> Self {
        GnBanner {
            n: p.n,
            alpha: fmt_rational(&p.alpha),
            beta: fmt_rational(&p.beta),
            rho: fmt_rational(&p.rho),
            rb: fmt_rational(&p.rb),
            k: p.k.as_ref().map(fmt_rational),
            delta_equiv: p.delta_equiv,
        }
    }
}

/// Smallest integer `>= r` (used for count bounds such as `⌈rho^(3n-1)⌉`).
pub fn ceil_u64(r: &Rational) -> Option<u64> {
    r.ceil().to_integer().to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{rat, MixedStrategy};

    fn g5() -> (GnParams, BimatrixGame) {
        let p = gn_params(5, &int(2)).unwrap();
        let g = build_gn(&p);
        (p, g)
    }

    #[test]
    fn params_k2_and_k4() {
        let p = gn_params(5, &int(2)).unwrap();
        assert_eq!(p.alpha, rat(3, 2));
        assert_eq!(p.beta, rat(3, 4));
        assert_eq!(p.rho, rat(3, 2));
        assert_eq!(p.rb, rat(3, 2));
        assert_eq!(p.k, Some(int(2)));
        let d = p.delta_equiv.unwrap();
        assert!((d - 0.569).abs() < 1e-3, "{d}");

        let p = gn_params(5, &int(4)).unwrap();
        assert_eq!(p.alpha, rat(5, 4));
        assert_eq!(p.beta, rat(15, 16));
        assert_eq!(p.rho, rat(5, 4));
        assert_eq!(p.rb, rat(15, 4));
    }

    #[test]
    fn params_reject_bad_k_and_n() {
        assert!(gn_params(4, &int(1)).is_err());
        assert!(gn_params(4, &rat(1, 2)).is_err());
        assert!(gn_params(1, &int(2)).is_err());
        assert!(GnParams::with_payoffs(4, int(1), rat(1, 2)).is_err());
        assert!(GnParams::with_payoffs(4, int(2), int(1)).is_err());
    }

    #[test]
    fn override_warns_when_cycling_inequality_fails() {
        // rho = (2 - 1/10) / 1 = 19/10; rho * beta at n = 2 is 19/100 < 1
        let (p, w) = GnParams::with_payoffs(2, int(2), rat(1, 10)).unwrap();
        assert!(p.k.is_none());
        assert!(w.is_some());
        let (_, w) = GnParams::with_payoffs(5, rat(3, 2), rat(3, 4)).unwrap();
        assert!(w.is_none());
    }

    #[test]
    fn g5_named_entries() {
        let (p, g) = g5();
        let r = |i: usize, j: usize| g.payoff(Player::Row, i - 1, j - 1).clone();
        assert_eq!(r(2, 1), int(1));
        assert_eq!(r(6, 6), int(1));
        assert_eq!(r(6, 5), p.alpha);
        assert_eq!(r(11, 20), p.alpha);
        assert_eq!(r(1, 1), int(0));
        assert_eq!(r(15, 20), p.beta);
        // rule order: R[16,15] = alpha, R[16,16] = 1 (the bullet rules, not the figure)
        assert_eq!(r(16, 15), p.alpha);
        assert_eq!(r(16, 16), int(1));
        assert_eq!(g.payoff_range(Player::Row), &(int(0), rat(3, 2)));
    }

    #[test]
    fn g5_golden_matrix() {
        // 0 = zero, b = beta, 1 = one, a = alpha
        let (p, g) = g5();
        let golden: [&str; 20] = [
            "00000000000000000000",
            "10000000000000000000",
            "b1000000000000000000",
            "bb100000000000000000",
            "bbb10000000000000000",
            "bbbba100000000000000",
            "bbbbba10000000000000",
            "bbbbbba1000000000000",
            "bbbbbbba100000000000",
            "bbbbbbbba10000000000",
            "bbbbbbbbba10000bbbba",
            "bbbbbbbbbba10000bbbb",
            "bbbbbbbbbbba10000bbb",
            "bbbbbbbbbbbba10000bb",
            "bbbbbbbbbbbbba10000b",
            "bbbbbbbbbbbbbba10000",
            "bbbbbbbbbb0bbbba1000",
            "bbbbbbbbbb00bbbba100",
            "bbbbbbbbbb000bbbba10",
            "bbbbbbbbbb0000bbbba1",
        ];
        for (i, line) in golden.iter().enumerate() {
            for (j, ch) in line.chars().enumerate() {
                let want = match ch {
                    '0' => int(0),
                    '1' => int(1),
                    'a' => p.alpha.clone(),
                    'b' => p.beta.clone(),
                    _ => unreachable!(),
                };
                assert_eq!(g.payoff(Player::Row, i, j), &want, "R[{},{}]", i + 1, j + 1);
            }
        }
    }

    #[test]
    fn gn_structure_over_grid() {
        for n in 2..=8 {
            for k in 2..=4 {
                let p = gn_params(n, &int(k)).unwrap();
                let g = build_gn(&p);
                let size = 4 * n;
                for i in 0..size {
                    for j in 0..size {
                        assert_eq!(g.payoff(Player::Col, i, j), g.payoff(Player::Row, j, i));
                        let v = g.payoff(Player::Row, i, j);
                        assert!(
                            v.is_zero() || v.is_one() || *v == p.alpha || *v == p.beta,
                            "unexpected entry at ({i},{j})"
                        );
                    }
                }
                for i in n..size {
                    assert!(g.payoff(Player::Row, i, i).is_one());
                    assert_eq!(g.payoff(Player::Row, i, i - 1), &p.alpha);
                }
                assert_eq!(g.payoff(Player::Row, 2 * n, size - 1), &p.alpha);
                assert_eq!(recognize_gn(&g).as_ref(), Some(&p));
            }
        }
    }

    #[test]
    fn last_block_is_circulant() {
        for n in [3, 5, 6] {
            let p = gn_params(n, &int(3)).unwrap();
            let g = build_gn(&p);
            let lo = 2 * n;
            let w = 2 * n;
            for a in 0..w {
                for b in 0..w {
                    for c in 0..w {
                        // row lo+a at column lo+c equals row lo+b at column rotated by (b - a)
                        let shifted = (c + b + w - a) % w;
                        assert_eq!(
                            g.payoff(Player::Row, lo + a, lo + c),
                            g.payoff(Player::Row, lo + b, lo + shifted)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn g5_last_block_pattern() {
        let (p, g) = g5();
        // within {11..20}: R[i,i]=1, R[i,i-1]=alpha, R[i,j]=beta for j in [i-n, i-2], cyclically
        for i in 0..10usize {
            for j in 0..10usize {
                let d = (i + 10 - j) % 10;
                let want = match d {
                    0 => int(1),
                    1 => p.alpha.clone(),
                    2..=5 => p.beta.clone(),
                    _ => int(0),
                };
                assert_eq!(g.payoff(Player::Row, 10 + i, 10 + j), &want);
            }
        }
    }

    #[test]
    fn g5_payoff_vectors_and_best_responses() {
        let (p, g) = g5();
        let e1 = MixedStrategy::pure(20, 0).unwrap();
        let v = g.payoff_vector(Player::Row, &e1).unwrap();
        assert_eq!(v[0], int(0));
        assert_eq!(v[1], int(1));
        assert!(v[2..].iter().all(|x| *x == p.beta));
        assert_eq!(g.best_response_set(Player::Row, &e1).unwrap(), vec![1]);

        let first5 = MixedStrategy::uniform_over(20, &[0, 1, 2, 3, 4]).unwrap();
        let v = g.payoff_vector(Player::Row, &first5).unwrap();
        assert_eq!(v[5], rat(9, 10));
        assert_eq!(v[6], rat(3, 4));
        assert_eq!(v[4], rat(13, 20));
        assert_eq!(g.best_response_set(Player::Row, &first5).unwrap(), vec![5]);

        let r = g.regret(Player::Row, &e1, &e1).unwrap();
        assert_eq!(r.raw, int(1));
        assert_eq!(r.normalized, rat(2, 3));
    }

    #[test]
    fn g5_uniform_block_value() {
        let (_, g) = g5();
        let block: Vec<usize> = (10..20).collect();
        let u = MixedStrategy::uniform_over(20, &block).unwrap();
        assert_eq!(g.expected_payoff(Player::Row, &u, &u).unwrap(), rat(11, 20));
        assert_eq!(g.expected_payoff(Player::Col, &u, &u).unwrap(), rat(11, 20));
        assert!(g.regret(Player::Row, &u, &u).unwrap().raw.is_zero());
    }

    #[test]
    fn g5_normalized_entries() {
        let (_, g) = g5();
        let n = g.normalize_to_unit();
        let mut seen: Vec<Rational> = n.matrix(Player::Row).into_iter().flatten().collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen, vec![int(0), rat(1, 2), rat(2, 3), int(1)]);
    }

    #[test]
    fn shapley_and_matching_pennies() {
        let s = build_shapley();
        assert_eq!(s.payoff(Player::Row, 0, 1), &int(1));
        assert_eq!(s.payoff(Player::Col, 0, 2), &int(1));
        assert!(s.pure_nash_equilibria().is_empty());
        let u = MixedStrategy::uniform(3).unwrap();
        assert_eq!(s.expected_payoff(Player::Row, &u, &u).unwrap(), rat(1, 3));
        assert_eq!(s.expected_payoff(Player::Col, &u, &u).unwrap(), rat(1, 3));

        let mp = build_matching_pennies();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(mp.payoff(Player::Row, i, j) + mp.payoff(Player::Col, i, j), int(1));
                let a = MixedStrategy::pure(2, i).unwrap();
                let b = MixedStrategy::pure(2, j).unwrap();
                let r1 = mp.regret(Player::Row, &a, &b).unwrap().raw;
                let r2 = mp.regret(Player::Col, &b, &a).unwrap().raw;
                assert!(r1.is_positive() || r2.is_positive());
            }
        }
        let u = MixedStrategy::uniform(2).unwrap();
        assert!(mp.regret(Player::Row, &u, &u).unwrap().raw.is_zero());
        assert!(mp.regret(Player::Col, &u, &u).unwrap().raw.is_zero());
    }

    #[test]
    fn random_games_are_deterministic_and_in_range() {
        let a = build_random(7, 4, 3, 12).unwrap();
        let b = build_random(7, 4, 3, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, build_random(8, 4, 3, 12).unwrap());
        assert!(a.is_unit_range());
        let den = BigInt::from(1u64 << 12);
        for p in [Player::Row, Player::Col] {
            for x in a.matrix(p).iter().flatten() {
                assert!((&den % x.denom()).is_zero());
            }
        }
        assert!(build_random(1, 0, 2, 4).is_err());
        assert!(build_random(1, 2, 2, 0).is_err());
        assert!(build_random(1, 2, 2, 31).is_err());
    }

    #[test]
    fn random_golden_seed1() {
        let g = build_random(1, 2, 2, 20).unwrap();
        let got: Vec<String> = [Player::Row, Player::Col]
            .iter()
            .flat_map(|&p| g.matrix(p).into_iter().flatten())
            .map(|x| fmt_rational(&x))
            .collect();
        assert_eq!(got, GOLDEN_SEED1);
    }

    // cross-checked against an independent splitmix64 implementation
    const GOLDEN_SEED1: [&str; 8] = [
        "151339/524288",
        "15385/65536",
        "784703/1048576",
        "752551/1048576",
        "386039/1048576",
        "546431/1048576",
        "145/65536",
        "409091/524288",
    ];
}
