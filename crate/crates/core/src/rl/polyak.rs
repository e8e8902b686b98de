use crate::nn::Mlp;
use crate::{Error, Result};

/// Polyak coefficient: the fraction of itself a target network keeps.
pub const DEFAULT_TAU: f64 = 0.995;

/// `target <- tau * target + (1 - tau) * online`, elementwise. Written as
/// an increment so that `online == target` leaves the target bit-identical.
pub fn polyak_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<()> {
    if !target.same_shape(online) {
        return Err(Error::config("polyak update between differently shaped networks"));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::config(format!("polyak coefficient {tau} outside [0, 1]")));
    }
    for (t, o) in target.layers_mut().iter_mut().zip(online.layers()) {
        t.weight.zip_mut_with(&o.weight, |t, &o| *t += (1.0 - tau) * (o - *t));
        t.bias.zip_mut_with(&o.bias, |t, &o| *t += (1.0 - tau) * (o - *t));
    }
    Ok(())
}
