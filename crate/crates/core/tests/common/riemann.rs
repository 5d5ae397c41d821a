//! Exact solution of the 1D Riemann problem for an ideal gas. The star
//! pressure is found by bisection on the pressure function.

#[derive(Debug, Clone, Copy)]
pub struct State {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

pub struct Riemann {
    pub left: State,
    pub right: State,
    pub gamma: f64,
    pub p_star: f64,
    pub u_star: f64,
}

fn sound(s: &State, g: f64) -> f64 {
    (g * s.p / s.rho).sqrt()
}

/// Velocity change across the wave connecting `s` to pressure `p`.
fn wave_fn(p: f64, s: &State, g: f64) -> f64 {
    let c = sound(s, g);
    if p > s.p {
        let a = 2.0 / ((g + 1.0) * s.rho);
        let b = (g - 1.0) / (g + 1.0) * s.p;
        (p - s.p) * (a / (p + b)).sqrt()
    } else {
        2.0 * c / (g - 1.0) * ((p / s.p).powf((g - 1.0) / (2.0 * g)) - 1.0)
    }
}

impl Riemann {
    pub fn new(left: State, right: State, gamma: f64) -> Self {
        let f = |p: f64| wave_fn(p, &left, gamma) + wave_fn(p, &right, gamma) + (right.u - left.u);
        let (mut lo, mut hi) = (1e-12, 10.0 * left.p.max(right.p));
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let p_star = 0.5 * (lo + hi);
        let u_star = 0.5 * (left.u + right.u)
            + 0.5 * (wave_fn(p_star, &right, gamma) - wave_fn(p_star, &left, gamma));
        Self {
            left,
            right,
            gamma,
            p_star,
            u_star,
        }
    }

    /// State at similarity coordinate `xi = (x - x0) / t`.
    pub fn sample(&self, xi: f64) -> State {
        let g = self.gamma;
        let (ps, us) = (self.p_star, self.u_star);
        if xi <= us {
            let l = self.left;
            let cl = sound(&l, g);
            if ps > l.p {
                let sl =
                    l.u - cl * ((g + 1.0) / (2.0 * g) * ps / l.p + (g - 1.0) / (2.0 * g)).sqrt();
                if xi <= sl {
                    l
                } else {
                    let r = (ps / l.p + (g - 1.0) / (g + 1.0))
                        / ((g - 1.0) / (g + 1.0) * ps / l.p + 1.0);
                    State {
                        rho: l.rho * r,
                        u: us,
                        p: ps,
                    }
                }
            } else {
                let head = l.u - cl;
                let cs = cl * (ps / l.p).powf((g - 1.0) / (2.0 * g));
                let tail = us - cs;
                if xi <= head {
                    l
                } else if xi >= tail {
                    State {
                        rho: l.rho * (ps / l.p).powf(1.0 / g),
                        u: us,
                        p: ps,
                    }
                } else {
                    let u = 2.0 / (g + 1.0) * (cl + (g - 1.0) / 2.0 * l.u + xi);
                    let c = 2.0 / (g + 1.0) * (cl + (g - 1.0) / 2.0 * (l.u - xi));
                    let rho = l.rho * (c / cl).powf(2.0 / (g - 1.0));
                    State {
                        rho,
                        u,
                        p: l.p * (c / cl).powf(2.0 * g / (g - 1.0)),
                    }
                }
            }
        } else {
            let r = self.right;
            let cr = sound(&r, g);
            if ps > r.p {
                let sr =
                    r.u + cr * ((g + 1.0) / (2.0 * g) * ps / r.p + (g - 1.0) / (2.0 * g)).sqrt();
                if xi >= sr {
                    r
                } else {
                    let k = (ps / r.p + (g - 1.0) / (g + 1.0))
                        / ((g - 1.0) / (g + 1.0) * ps / r.p + 1.0);
                    State {
                        rho: r.rho * k,
                        u: us,
                        p: ps,
                    }
                }
            } else {
                let head = r.u + cr;
                let cs = cr * (ps / r.p).powf((g - 1.0) / (2.0 * g));
                let tail = us + cs;
                if xi >= head {
                    r
                } else if xi <= tail {
                    State {
                        rho: r.rho * (ps / r.p).powf(1.0 / g),
                        u: us,
                        p: ps,
                    }
                } else {
                    let u = 2.0 / (g + 1.0) * (-cr + (g - 1.0) / 2.0 * r.u + xi);
                    let c = 2.0 / (g + 1.0) * (cr - (g - 1.0) / 2.0 * (r.u - xi));
                    let rho = r.rho * (c / cr).powf(2.0 / (g - 1.0));
                    State {
                        rho,
                        u,
                        p: r.p * (c / cr).powf(2.0 * g / (g - 1.0)),
                    }
                }
            }
        }
    }
}

#[test]
fn sod_star_state_matches_tabulated() {
    let r = Riemann::new(
        State {
            rho: 1.0,
            u: 0.0,
            p: 1.0,
        },
        State {
            rho: 0.125,
            u: 0.0,
            p: 0.1,
        },
        1.4,
    );
    // Widely tabulated values for this problem.
    assert!((r.p_star - 0.30313).abs() < 1e-5);
    assert!((r.u_star - 0.92745).abs() < 1e-5);
    assert!((r.sample(0.5).rho - 0.42632).abs() < 1e-4);
    assert!((r.sample(1.5).rho - 0.26557).abs() < 1e-4);
}
