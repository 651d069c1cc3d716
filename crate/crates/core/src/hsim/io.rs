use super::{HybridTrajectory, MonitorTrace};
use crate::certify::LoopKind;
use std::io::{self, Write};

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn channel_names(kind: LoopKind) -> [&'static str; 4] {
    match kind {
        LoopKind::Controller => ["V_s", "V_a", "Vbar", "W"],
        LoopKind::Plant => ["W_s", "W_a", "Wbar", "V"],
    }
}

/// One row per sample: `t, j, sigma, x…, u…, w…, tracking_error, U,
/// <four Lyapunov channels>, residual_radius`.
pub fn write_trajectory_csv<W: Write>(out: &mut W, traj: &HybridTrajectory, mon: &MonitorTrace) -> io::Result<()> {
    let first = traj.points.first().expect("non-empty trajectory");
    let mut head = vec!["t".to_string(), "j".into(), "sigma".into()];
    head.extend((0..first.x.len()).map(|i| format!("x{i}")));
    head.extend((0..first.u.len()).map(|i| format!("u{i}")));
    head.extend((0..first.w.len()).map(|i| format!("w{i}")));
    head.extend(["tracking_error".to_string(), "U".into()]);
    head.extend(channel_names(traj.loop_kind).iter().map(|s| s.to_string()));
    head.push("residual_radius".into());
    writeln!(out, "{}", head.join(","))?;
    for (p, m) in traj.points.iter().zip(&mon.samples) {
        let mut row = vec![num(p.t), p.j.to_string(), p.sigma.clone()];
        row.extend(p.x.iter().chain(p.u.iter()).chain(p.w.iter()).map(|v| num(*v)));
        row.extend([m.tracking_error, m.u_lyap, m.mode_nominal, m.mode_attack, m.weighted, m.other, m.residual_radius].map(num));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_monitor_csv<W: Write>(out: &mut W, mon: &MonitorTrace) -> io::Result<()> {
    let [a, b, c, d] = channel_names(mon.loop_kind);
    writeln!(out, "t,j,sigma,tau,{a},{b},{c},{d},U,xi_norm,tracking_error,residual_radius,eligible")?;
    for s in &mon.samples {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            num(s.t),
            s.j,
            s.sigma,
            num(s.tau),
            num(s.mode_nominal),
            num(s.mode_attack),
            num(s.weighted),
            num(s.other),
            num(s.u_lyap),
            num(s.xi_norm),
            num(s.tracking_error),
            num(s.residual_radius),
            u8::from(s.xi_norm >= s.residual_radius)
        )?;
    }
    Ok(())
}
