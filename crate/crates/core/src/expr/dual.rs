use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use super::{BinaryOp, Compiled, EvalError, Function};

/// First-order dual number `re + eps·ε` with ε² = 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub fn new(re: f64, eps: f64) -> Self {
        Self { re, eps }
    }

    pub fn constant(re: f64) -> Self {
        Self { re, eps: 0.0 }
    }

    pub fn variable(re: f64) -> Self {
        Self { re, eps: 1.0 }
    }

    fn chain(self, value: f64, slope: f64) -> Self {
        Self { re: value, eps: slope * self.eps }
    }

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Dual::constant(1.0);
        }
        let mut acc = Dual::constant(1.0);
        for _ in 0..n.unsigned_abs() {
            acc = acc * self;
        }
        if n < 0 {
            Dual::new(1.0 / acc.re, -acc.eps / (acc.re * acc.re))
        } else {
            acc
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

/// Value of an expression with its partial derivatives by variable name.
#[derive(Debug, Clone, PartialEq)]
pub struct DualValue {
    pub value: f64,
    pub partials: BTreeMap<String, f64>,
    /// Set when `abs` was differentiated at 0.
    pub nonsmooth: bool,
}

pub(super) struct Context<'a> {
    pub values: &'a [f64],
    pub seed: Option<usize>,
    pub min_denominator: f64,
    pub kink: bool,
}

const MAX_INT_POWER: f64 = 16.0;

impl Context<'_> {
    pub(super) fn eval(&mut self, node: &Compiled) -> Result<Dual, EvalError> {
        let out = match node {
            Compiled::Const(c) => Dual::constant(*c),
            Compiled::Slot(i) => Dual::new(self.values[*i], if self.seed == Some(*i) { 1.0 } else { 0.0 }),
            Compiled::Neg(a) => -self.eval(a)?,
            Compiled::Binary(op, at, a, b) => {
                let a = self.eval(a)?;
                let b = self.eval(b)?;
                let r = match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b.re == 0.0 || b.re.abs() < self.min_denominator {
                            return Err(EvalError::domain(*at, format!("division by {:e}", b.re)));
                        }
                        Dual::new(a.re / b.re, (a.eps * b.re - a.re * b.eps) / (b.re * b.re))
                    }
                    BinaryOp::Pow => self.pow(a, b, *at)?,
                };
                check_finite(r, *at)?
            }
            Compiled::Call(f, at, a) => {
                let a = self.eval(a)?;
                let r = match f {
                    Function::Sin => a.chain(a.re.sin(), a.re.cos()),
                    Function::Cos => a.chain(a.re.cos(), -a.re.sin()),
                    Function::Exp => {
                        let e = a.re.exp();
                        a.chain(e, e)
                    }
                    Function::Log => {
                        if a.re <= 0.0 {
                            return Err(EvalError::domain(*at, format!("log of {}", a.re)));
                        }
                        a.chain(a.re.ln(), 1.0 / a.re)
                    }
                    Function::Sqrt => {
                        if a.re < 0.0 {
                            return Err(EvalError::domain(*at, format!("sqrt of {}", a.re)));
                        }
                        if a.re == 0.0 && a.eps != 0.0 {
                            return Err(EvalError::domain(*at, "sqrt is not differentiable at 0"));
                        }
                        let s = a.re.sqrt();
                        if a.eps == 0.0 {
                            Dual::constant(s)
                        } else {
                            a.chain(s, 0.5 / s)
                        }
                    }
                    Function::Abs => {
                        if a.re == 0.0 {
                            self.kink = true;
                            Dual::constant(0.0)
                        } else {
                            a.chain(a.re.abs(), a.re.signum())
                        }
                    }
                };
                check_finite(r, *at)?
            }
        };
        Ok(out)
    }

    fn pow(&mut self, base: Dual, exp: Dual, at: usize) -> Result<Dual, EvalError> {
        let n = exp.re;
        if exp.eps == 0.0 && n.fract() == 0.0 && n.abs() <= MAX_INT_POWER {
            if base.re == 0.0 && n < 0.0 {
                return Err(EvalError::domain(at, "zero raised to a negative power"));
            }
            return Ok(base.powi(n as i32));
        }
        if base.re <= 0.0 {
            return Err(EvalError::domain(
                at,
                format!("{} raised to non-integer power {}", base.re, n),
            ));
        }
        let value = base.re.powf(n);
        let ln = base.re.ln();
        Ok(Dual::new(value, value * (exp.eps * ln + n * base.eps / base.re)))
    }
}

fn check_finite(d: Dual, at: usize) -> Result<Dual, EvalError> {
    if d.re.is_finite() && d.eps.is_finite() {
        Ok(d)
    } else {
        Err(EvalError::domain(at, "non-finite result"))
    }
}
