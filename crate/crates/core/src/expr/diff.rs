use super::{ComplexExpr, Node, C64};

/// Which Wirtinger operator: `∂_w = (∂_x − i∂_y)/2` or `∂_w̄ = (∂_x + i∂_y)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wirtinger {
    DW,
    DWbar,
}

impl Wirtinger {
    pub fn other(self) -> Self {
        match self {
            Wirtinger::DW => Wirtinger::DWbar,
            Wirtinger::DWbar => Wirtinger::DW,
        }
    }
}

fn k(v: f64) -> ComplexExpr {
    ComplexExpr::real(v)
}

pub(super) fn wirtinger(e: &ComplexExpr, d: Wirtinger) -> ComplexExpr {
    let zero = || k(0.0);
    match e.node() {
        Node::Const(_) => zero(),
        Node::W => match d {
            Wirtinger::DW => k(1.0),
            Wirtinger::DWbar => zero(),
        },
        Node::Wbar => match d {
            Wirtinger::DW => zero(),
            Wirtinger::DWbar => k(1.0),
        },
        Node::Neg(u) => wirtinger(u, d).neg(),
        // ∂_w conj(u) = conj(∂_w̄ u)
        Node::Conj(u) => wirtinger(u, d.other()).conj(),
        // re u = (u + conj u)/2
        Node::Re(u) => wirtinger(u, d)
            .add(&wirtinger(u, d.other()).conj())
            .div(&k(2.0)),
        // im u = (u − conj u)/(2i)
        Node::Im(u) => wirtinger(u, d)
            .sub(&wirtinger(u, d.other()).conj())
            .mul(&ComplexExpr::constant(C64::new(0.0, -0.5))),
        // |u| = (u conj u)^(1/2); the division by |u| makes the derivative a
        // domain error at u = 0
        Node::Abs(u) => {
            let du = wirtinger(u, d);
            let du_conj = wirtinger(u, d.other()).conj();
            du.mul(&u.conj())
                .add(&u.mul(&du_conj))
                .div(&k(2.0).mul(&u.abs()))
        }
        Node::Exp(u) => e.mul(&wirtinger(u, d)),
        Node::Log(u) => wirtinger(u, d).div(u),
        Node::Sqrt(u) => wirtinger(u, d).div(&k(2.0).mul(e)),
        Node::PowInt(u, n) => k(*n as f64)
            .mul(&u.powi(n - 1))
            .mul(&wirtinger(u, d)),
        Node::Pow(u, p) => ComplexExpr::constant(*p)
            .mul(&u.pow(p - 1.0))
            .mul(&wirtinger(u, d)),
        Node::Add(a, b) => wirtinger(a, d).add(&wirtinger(b, d)),
        Node::Sub(a, b) => wirtinger(a, d).sub(&wirtinger(b, d)),
        Node::Mul(a, b) => wirtinger(a, d).mul(b).add(&a.mul(&wirtinger(b, d))),
        Node::Div(a, b) => wirtinger(a, d)
            .mul(b)
            .sub(&a.mul(&wirtinger(b, d)))
            .div(&b.powi(2)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::C64;

    /// Central-difference Wirtinger quotient.
    pub(crate) fn fd(e: &ComplexExpr, w: C64, h: f64, d: Wirtinger) -> C64 {
        let f = |z: C64| e.eval(z).unwrap();
        let fx = (f(w + h) - f(w - h)) / (2.0 * h);
        let ih = C64::new(0.0, h);
        let fy = (f(w + ih) - f(w - ih)) / (2.0 * h);
        let i = C64::new(0.0, 1.0);
        match d {
            Wirtinger::DW => (fx - i * fy) / 2.0,
            Wirtinger::DWbar => (fx + i * fy) / 2.0,
        }
    }

    #[test]
    fn holomorphic_is_killed_by_dwbar() {
        let e = ComplexExpr::parse("w^3").unwrap();
        assert_eq!(e.d_wbar().as_const(), Some(C64::new(0.0, 0.0)));
    }

    #[test]
    fn x_has_half_derivative() {
        let e = ComplexExpr::parse("x").unwrap();
        assert_eq!(e.d_w().as_const(), Some(C64::new(0.5, 0.0)));
        assert_eq!(e.d_wbar().as_const(), Some(C64::new(0.5, 0.0)));
    }

    #[test]
    fn hyperbolic_dw_matches_closed_form_and_fd() {
        use rand::{Rng, SeedableRng};
        let e = ComplexExpr::parse("(1-w*conj(w))^(-2)").unwrap();
        let closed = ComplexExpr::parse("2*conj(w)*(1 - abs(w)^2)^(-3)").unwrap();
        let dw = e.d_w();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let r: f64 = rng.gen_range(0.0..0.8);
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let w = C64::from_polar(r, t);
            let sym = dw.eval(w).unwrap();
            assert!((sym - closed.eval(w).unwrap()).norm() < 1e-12 * (1.0 + sym.norm()));
            assert!((sym - fd(&e, w, 1e-5, Wirtinger::DW)).norm() < 1e-8 * (1.0 + sym.norm()));
        }
    }

    #[test]
    fn conj_rule() {
        let u = ComplexExpr::parse("w^2*conj(w) + exp(w)").unwrap();
        let w = C64::new(0.3, -0.4);
        let lhs = u.conj().d_w().eval(w).unwrap();
        let rhs = u.d_wbar().eval(w).unwrap().conj();
        assert!((lhs - rhs).norm() < 1e-15);
    }
}
