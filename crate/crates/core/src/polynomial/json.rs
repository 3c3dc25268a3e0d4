//! JSON form: `{n_vars, terms: [{exponents, numerator, denominator}]}` with
//! exact integer strings for the coefficient fraction.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{MultiIndex, SimplexPolynomial};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub exponents: Vec<u32>,
    pub numerator: String,
    pub denominator: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub n_vars: usize,
    pub terms: Vec<TermJson>,
}

impl<S: Scalar> SimplexPolynomial<S> {
    pub fn to_json(&self) -> PolynomialJson {
        PolynomialJson {
            n_vars: self.n_vars(),
            terms: self
                .terms()
                .map(|(alpha, c)| {
                    let r = c.to_rational();
                    TermJson {
                        exponents: alpha.to_dense(self.n_vars()),
                        numerator: r.numer().to_string(),
                        denominator: r.denom().to_string(),
                    }
                })
                .collect(),
        }
    }

    pub fn from_json(json: &PolynomialJson) -> Result<Self> {
        let mut terms = Vec::with_capacity(json.terms.len());
        for t in &json.terms {
            if t.exponents.len() != json.n_vars {
                return Err(Error::Shape(format!(
                    "term has {} exponents, expected {}",
                    t.exponents.len(),
                    json.n_vars
                )));
            }
            let num: BigInt = t
                .numerator
                .parse()
                .map_err(|_| Error::Input(format!("bad numerator {:?}", t.numerator)))?;
            let den: BigInt = t
                .denominator
                .parse()
                .map_err(|_| Error::Input(format!("bad denominator {:?}", t.denominator)))?;
            if den == BigInt::from(0) {
                return Err(Error::Input("zero denominator".into()));
            }
            terms.push((
                MultiIndex::from_dense(&t.exponents),
                S::from_rational(&BigRational::new(num, den)),
            ));
        }
        Self::from_terms(json.n_vars, terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn json_round_trip() {
        let p = SimplexPolynomial::<Rational>::parse("x1^2*x2 - 1/3*x2 + 7", 2).unwrap();
        let text = serde_json::to_string(&p.to_json()).unwrap();
        let back: PolynomialJson = serde_json::from_str(&text).unwrap();
        assert_eq!(SimplexPolynomial::<Rational>::from_json(&back).unwrap(), p);

        let d = p.to_f64();
        let back = SimplexPolynomial::<f64>::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn json_rejects_bad_terms() {
        let bad = PolynomialJson {
            n_vars: 2,
            terms: vec![TermJson {
                exponents: vec![1],
                numerator: "1".into(),
                denominator: "1".into(),
            }],
        };
        assert!(SimplexPolynomial::<Rational>::from_json(&bad).is_err());
    }
}
