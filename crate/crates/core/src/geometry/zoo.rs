//! The fixed family of test bodies used by the acceptance suite.

use super::{minkowski_sum, Body};

pub fn disc() -> Body {
    Body::ball(&[0.0, 0.0], 1.0).expect("valid disc")
}

pub fn disc_of_radius(radius: f64) -> Body {
    Body::ball(&[0.0, 0.0], radius).expect("valid disc")
}

pub fn ellipse() -> Body {
    Body::ellipsoid(&[0.0, 0.0], &[2.0, 1.0]).expect("valid ellipse")
}

/// `x⁴ + y⁴ ≤ 1`.
pub fn quartic_ball() -> Body {
    Body::p_ball(&[0.0, 0.0], &[1.0, 1.0], 4).expect("valid p-ball")
}

pub fn ellipse_plus_disc() -> Body {
    minkowski_sum(&ellipse(), &disc()).expect("same dimension")
}

pub fn quartic_plus_disc() -> Body {
    minkowski_sum(&quartic_ball(), &disc()).expect("same dimension")
}

/// Named planar bodies, in a fixed order.
pub fn planar() -> Vec<(&'static str, Body)> {
    vec![
        ("disc", disc()),
        ("ellipse", ellipse()),
        ("quartic", quartic_ball()),
        ("ellipse+disc", ellipse_plus_disc()),
        ("quartic+disc", quartic_plus_disc()),
    ]
}

/// Look a zoo body up by name.
pub fn by_name(name: &str) -> Option<Body> {
    planar().into_iter().find(|(n, _)| *n == name).map(|(_, b)| b)
}
