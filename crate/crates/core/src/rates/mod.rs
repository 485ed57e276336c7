//! Interest-rate models and products: discount curves and their yield and
//! forward views, forward-rate (HJM) simulation, short-rate bond prices and
//! bond options, coupon and floating bonds, swaps, caps and floors, and
//! swaptions by Jamshidian's decomposition.

mod curve;
mod hjm;
mod products;
mod short_rate;

pub use curve::{curve_views, CurveViews, DiscountCurve};
pub use hjm::{forward_measure_shift, hjm_simulate, FactorVol, HjmGrid, HjmPath, HjmSurface};
pub use products::{
    caplet_black, caplet_via_bond_put, coupon_bond_price, floating_bond_value, floorlet_black,
    floorlet_via_bond_call, forward_libor, forward_swap_rate, par_coupon_rate, swap_legs, swap_rate,
    PiecewiseVol, Schedule,
};
pub use short_rate::{
    bond_option, bond_option_from_prices, coupon_bond_option, jamshidian_strikes, short_rate_bond_price,
    short_rate_coupon_bond, simulate_short_rate, swaption_price, term_variance, term_variance_quadrature,
    JamshidianStrikes, ShortRateModel, TimeFn,
};
