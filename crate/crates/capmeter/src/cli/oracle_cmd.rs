use super::{CliError, OracleArgs};
use crate::oracle::{
    pacbayes_bound, pacbayes_effective_dim, quad_capacity_exact, quad_capacity_hm, HessianSpectrum, OracleError,
};

fn spectrum(args: &OracleArgs) -> Result<HessianSpectrum, CliError> {
    let bad = |e: OracleError| CliError::config(format!("malformed spectrum: {e}"));
    match (&args.lambda, &args.spectrum) {
        (Some(l), None) => {
            let eps = args.eps.ok_or_else(|| CliError::config("--lambda needs --eps (the prior precision)"))?;
            HessianSpectrum::new(l.clone(), eps, None).map_err(bad)
        }
        (None, Some(path)) => HessianSpectrum::from_file(path).map_err(bad),
        _ => Err(CliError::config("pass --lambda with --eps, or --spectrum <file>")),
    }
}

/// The lines `oracle` prints, one `name(N=..)=value` per quantity.
pub(crate) fn oracle_lines(args: &OracleArgs) -> Result<Vec<String>, CliError> {
    let spec = spectrum(args)?;
    let eval = |e: OracleError| CliError::config(e.to_string());
    let everything = !args.exact && !args.hm && args.dim_at.is_empty();
    let mut out = vec![format!("p={}", spec.p()), format!("epsilon={}", spec.epsilon())];
    if args.exact || everything {
        for &n in &args.n {
            out.push(format!("capacity_exact(N={n})={:.6}", quad_capacity_exact(&spec, n as f64).map_err(eval)?));
        }
    }
    if args.hm || everything {
        out.push(format!("capacity_hm={:.6}", quad_capacity_hm(&spec).map_err(eval)?));
    }
    let dims = if everything { &args.n } else { &args.dim_at };
    for &n in dims {
        out.push(format!("pacbayes_effective_dim(N={n})={}", pacbayes_effective_dim(&spec, n).map_err(eval)?));
    }
    if let (Some(kappa), Some(dist_sq)) = (args.kappa, args.dist_sq) {
        for &n in &args.n {
            out.push(format!("pacbayes_bound(N={n})={:.6}", pacbayes_bound(&spec, n, kappa, dist_sq).map_err(eval)?));
        }
    }
    Ok(out)
}

pub(crate) fn cmd_oracle(args: &OracleArgs) -> Result<(), CliError> {
    for line in oracle_lines(args)? {
        println!("{line}");
    }
    Ok(())
}
