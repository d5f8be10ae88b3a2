//! Symmetric Gauss rules on the reference triangle `{(x, y): x, y >= 0, x + y <= 1}`
//! and Gauss-Legendre rules on the unit interval.

use crate::error::{Error, Result};

/// Quadrature rule on the reference triangle. Points are barycentric
/// coordinates `(l0, l1, l2)`, where the Cartesian reference point is
/// `(l1, l2)`. Weights sum to the reference area `1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Gauss-Legendre rule on `[0, 1]`; weights sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrates `f(x, y)` over the reference triangle.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[1], p[2]))
            .sum()
    }
}

impl LineRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&s, w)| w * f(s)).sum()
    }
}

struct Orbits {
    rule: QuadratureRule,
}

impl Orbits {
    fn new(degree: usize) -> Self {
        Orbits {
            rule: QuadratureRule {
                points: Vec::new(),
                weights: Vec::new(),
                degree,
            },
        }
    }

    /// Weight `w` is relative to the reference area.
    fn centroid(mut self, w: f64) -> Self {
        let t = 1.0 / 3.0;
        self.rule.points.push([t, t, t]);
        self.rule.weights.push(0.5 * w);
        self
    }

    /// The three permutations of `(a, a, 1 - 2a)`.
    fn s21(mut self, a: f64, w: f64) -> Self {
        let b = 1.0 - 2.0 * a;
        for p in [[b, a, a], [a, b, a], [a, a, b]] {
            self.rule.points.push(p);
            self.rule.weights.push(0.5 * w);
        }
        self
    }

    /// The six permutations of `(a, b, 1 - a - b)`.
    fn s111(mut self, a: f64, b: f64, w: f64) -> Self {
        let c = 1.0 - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.rule.points.push(p);
            self.rule.weights.push(0.5 * w);
        }
        self
    }
}

/// Symmetric rule with positive weights that integrates all polynomials of
/// total degree `<= degree` exactly, for `degree` in `1..=6`. The returned
/// rule's `degree` may exceed the request.
pub fn quadrature_rule(degree: usize) -> Result<QuadratureRule> {
    let rule = match degree {
        1 => Orbits::new(1).centroid(1.0),
        2 => Orbits::new(2).s21(1.0 / 6.0, 1.0 / 3.0),
        // The 4-point degree-3 rule has a negative weight; use the degree-4 one.
        3 | 4 => Orbits::new(4)
            .s21(0.445_948_490_915_964_886_318_329_253_883, 0.223_381_589_678_011_465_695_007_008_433)
            .s21(0.091_576_213_509_770_743_459_571_463_402_2, 0.109_951_743_655_321_867_638_326_324_900),
        5 => {
            let r15 = 15f64.sqrt();
            Orbits::new(5)
                .centroid(9.0 / 40.0)
                .s21((6.0 - r15) / 21.0, (155.0 - r15) / 1200.0)
                .s21((6.0 + r15) / 21.0, (155.0 + r15) / 1200.0)
        }
        6 => Orbits::new(6)
            .s21(0.249_286_745_170_910_421_291_638_553_107, 0.116_786_275_726_379_366_025_289_611_386)
            .s21(0.063_089_014_491_502_228_340_331_602_870_8, 0.050_844_906_370_206_816_920_936_809_106_9)
            .s111(
                0.053_145_049_844_816_947_353_249_671_631_4,
                0.310_352_451_033_784_405_416_607_733_957,
                0.082_851_075_618_373_575_193_553_456_420_4,
            ),
        _ => {
            return Err(Error::config(
                "quadrature_degree",
                format!("degree {degree} not supported (1..=6)"),
            ))
        }
    };
    Ok(rule.rule)
}

/// Gauss-Legendre rule on `[0, 1]` exact for polynomials of degree `<= degree`.
pub fn line_rule(degree: usize) -> Result<LineRule> {
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match degree {
        0 | 1 => (vec![0.0], vec![2.0]),
        2 | 3 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        4 | 5 => {
            let a = (3.0f64 / 5.0).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        6 | 7 => {
            let s = (6.0f64 / 5.0).sqrt();
            let inner = ((3.0 - 2.0 * s) / 7.0).sqrt();
            let outer = ((3.0 + 2.0 * s) / 7.0).sqrt();
            let r30 = 30f64.sqrt();
            let wi = (18.0 + r30) / 36.0;
            let wo = (18.0 - r30) / 36.0;
            (vec![-outer, -inner, inner, outer], vec![wo, wi, wi, wo])
        }
        _ => {
            return Err(Error::config(
                "quadrature_degree",
                format!("line degree {degree} not supported (0..=7)"),
            ))
        }
    };
    let actual = 2 * nodes.len() - 1;
    Ok(LineRule {
        points: nodes.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        weights: weights.iter().map(|w| 0.5 * w).collect(),
        degree: actual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Exact integral of `x^i y^j` over the reference triangle.
    fn monomial(i: u32, j: u32) -> f64 {
        factorial(i) * factorial(j) / factorial(i + j + 2)
    }

    #[test]
    fn exact_to_declared_degree() {
        for d in 1..=6 {
            let rule = quadrature_rule(d).unwrap();
            assert!(rule.degree >= d);
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for p in &rule.points {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
            for i in 0..=rule.degree as u32 {
                for j in 0..=(rule.degree as u32 - i) {
                    let q = rule.integrate(|x, y| x.powi(i as i32) * y.powi(j as i32));
                    assert!(
                        (q - monomial(i, j)).abs() < 1e-13,
                        "degree {d}: x^{i} y^{j}: {q} vs {}",
                        monomial(i, j)
                    );
                }
            }
        }
    }

    #[test]
    fn named_values() {
        let r1 = quadrature_rule(1).unwrap();
        assert_eq!(r1.len(), 1);
        assert_eq!(r1.weights[0], 0.5);
        let r2 = quadrature_rule(2).unwrap();
        assert!((r2.integrate(|x, _| x * x) - 1.0 / 12.0).abs() < 1e-15);
        assert!((r2.integrate(|x, y| x * y) - 1.0 / 24.0).abs() < 1e-15);
        assert!((r2.integrate(|_, y| y * y) - 1.0 / 12.0).abs() < 1e-15);
        let r6 = quadrature_rule(6).unwrap();
        assert!((r6.integrate(|x, y| x.powi(4) * y * y) - 1.0 / 840.0).abs() < 1e-15);
    }

    #[test]
    fn unsupported_degree() {
        assert!(quadrature_rule(0).is_err());
        assert!(quadrature_rule(7).is_err());
    }

    #[test]
    fn line_rules_exact() {
        for d in 0..=7 {
            let rule = line_rule(d).unwrap();
            for k in 0..=rule.degree as i32 {
                let q = rule.integrate(|s| s.powi(k));
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "degree {d}, s^{k}");
            }
        }
    }
}
