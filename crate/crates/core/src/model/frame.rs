use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("site {site} is outside 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("shifted-frame series has {available} samples but {required} are needed; extend the run by (N-1)*tau")]
    InsufficientHorizon { required: usize, available: usize },
}

/// Time-shifted picture: site `n` (1-based, upstream first) is coupled from
/// `t_n = (N - n) tau` on, so the most downstream site activates at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedFrame {
    n_sites: usize,
    tau: f64,
    activation_times: Vec<f64>,
}

impl ShiftedFrame {
    pub fn new(n_sites: usize, tau: f64) -> Self {
        let activation_times = (1..=n_sites).map(|n| (n_sites - n) as f64 * tau).collect();
        Self { n_sites, tau, activation_times }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn activation_times(&self) -> &[f64] {
        &self.activation_times
    }

    pub fn check_site(&self, site: usize) -> Result<(), FrameError> {
        if site == 0 || site > self.n_sites {
            Err(FrameError::SiteOutOfRange { site, n_sites: self.n_sites })
        } else {
            Ok(())
        }
    }

    pub fn activation_time(&self, site: usize) -> Result<f64, FrameError> {
        self.check_site(site)?;
        Ok(self.activation_times[site - 1])
    }

    /// Number of grid samples the physical frame of `site` lags the shifted frame,
    /// for a grid with `samples_per_tau` samples per delay.
    pub fn shift_samples(&self, site: usize, samples_per_tau: usize) -> Result<usize, FrameError> {
        self.check_site(site)?;
        Ok((self.n_sites - site) * samples_per_tau)
    }

    /// Map a shifted-frame series belonging to site `site` (the first index of a
    /// correlator) onto the physical frame: `out[i] = shifted[i + (N - n) k]`.
    ///
    /// `physical_len` samples are returned; the shifted series must extend far enough.
    pub fn unshift<'a, T>(
        &self,
        shifted: &'a [T],
        site: usize,
        samples_per_tau: usize,
        physical_len: usize,
    ) -> Result<&'a [T], FrameError> {
        let offset = self.shift_samples(site, samples_per_tau)?;
        let required = offset + physical_len;
        if shifted.len() < required {
            return Err(FrameError::InsufficientHorizon { required, available: shifted.len() });
        }
        Ok(&shifted[offset..required])
    }

    /// Whether `site` is coupled at integer step `step` of a grid with
    /// `steps_per_tau` steps per delay (Θ(0) = 1).
    #[inline]
    pub fn is_active(&self, site: usize, step: usize, steps_per_tau: usize) -> bool {
        step >= (self.n_sites - site) * steps_per_tau
    }

    /// Smallest 1-based site index active at `step`; active sites form the tail
    /// `first_active..=N`.
    #[inline]
    pub fn first_active(&self, step: usize, steps_per_tau: usize) -> usize {
        if steps_per_tau == 0 {
            return 1;
        }
        let blocks = step / steps_per_tau;
        self.n_sites.saturating_sub(blocks).max(1)
    }
}
