use crate::data::{DayInput, HourInput, DAY_LAGS, HOUR_WINDOW, WEEK_LAGS};
use crate::error::{Error, Result};
use crate::nn::{Activation, DenseCache, DenseLayer, JobRng, Parameters};
use crate::HOURS;

use super::{hidden_backward, hidden_forward, Dropout, LayerCache};

/// Width of the lag-pair, hour-history, FC1, FC2 and pre-output layers.
pub const HIDDEN: usize = 10;
/// Width of the two season/weekday layers.
pub const CALENDAR_HIDDEN: usize = 5;

const SW_WIDTH: usize = 6;
const HOLIDAY_WIDTH: usize = 2;

/// The subnetwork producing the forecast of one hour.
///
/// ```text
/// [L_month,T_month] -> month ─┐
/// [L_week, T_week ] -> week  ─┤
/// [L_day,  T_day  ] -> day   ─┼─ fc2 ─┐
/// [S,W] -> calendar_fc2 ──────┤       │
/// H ──────────────────────────┘       ├─ pre_output -> output -> L_h
/// L_hour -> hour ─┬─ fc1 ─────────────┤
/// [S,W] -> calendar_fc1 ─┘            │
/// T_h ────────────────────────────────┘
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct HourNet {
    pub month: DenseLayer,
    pub week: DenseLayer,
    pub day: DenseLayer,
    pub hour: DenseLayer,
    pub calendar_fc1: DenseLayer,
    pub calendar_fc2: DenseLayer,
    pub fc1: DenseLayer,
    pub fc2: DenseLayer,
    pub pre_output: DenseLayer,
    pub output: DenseLayer,
}

const LAYER_NAMES: [&str; 10] = [
    "month",
    "week",
    "day",
    "hour",
    "calendar_fc1",
    "calendar_fc2",
    "fc1",
    "fc2",
    "pre_output",
    "output",
];

#[derive(Debug, Clone)]
pub struct HourCache {
    month: LayerCache,
    week: LayerCache,
    day: LayerCache,
    hour: LayerCache,
    calendar_fc1: LayerCache,
    calendar_fc2: LayerCache,
    fc1: LayerCache,
    fc2: LayerCache,
    pre_output: LayerCache,
    output: DenseCache,
}

impl HourNet {
    pub fn new(month_lags: usize) -> Self {
        let selu = Activation::Selu;
        Self {
            month: DenseLayer::new(2 * month_lags, HIDDEN, selu),
            week: DenseLayer::new(2 * WEEK_LAGS, HIDDEN, selu),
            day: DenseLayer::new(2 * DAY_LAGS, HIDDEN, selu),
            hour: DenseLayer::new(HOUR_WINDOW, HIDDEN, selu),
            calendar_fc1: DenseLayer::new(SW_WIDTH, CALENDAR_HIDDEN, selu),
            calendar_fc2: DenseLayer::new(SW_WIDTH, CALENDAR_HIDDEN, selu),
            fc1: DenseLayer::new(HIDDEN + CALENDAR_HIDDEN, HIDDEN, selu),
            fc2: DenseLayer::new(3 * HIDDEN + CALENDAR_HIDDEN + HOLIDAY_WIDTH, HIDDEN, selu),
            pre_output: DenseLayer::new(2 * HIDDEN + 1, HIDDEN, selu),
            output: DenseLayer::new(HIDDEN, 1, Activation::Identity),
        }
    }

    pub fn layers(&self) -> [&DenseLayer; 10] {
        [
            &self.month,
            &self.week,
            &self.day,
            &self.hour,
            &self.calendar_fc1,
            &self.calendar_fc2,
            &self.fc1,
            &self.fc2,
            &self.pre_output,
            &self.output,
        ]
    }

    pub fn layers_mut(&mut self) -> [&mut DenseLayer; 10] {
        [
            &mut self.month,
            &mut self.week,
            &mut self.day,
            &mut self.hour,
            &mut self.calendar_fc1,
            &mut self.calendar_fc2,
            &mut self.fc1,
            &mut self.fc2,
            &mut self.pre_output,
            &mut self.output,
        ]
    }

    fn init(&mut self, rng: &mut JobRng) {
        for l in self.layers_mut() {
            l.init_lecun(rng);
        }
    }

    /// Forecast of one hour. `l_hour` is the recent-load window with the
    /// autoregressive slots already substituted.
    pub fn forward(
        &self,
        input: &HourInput,
        l_hour: &[f64; HOUR_WINDOW],
        use_calendar: bool,
        mut dropout: Option<&mut Dropout<'_>>,
    ) -> Result<(f64, HourCache)> {
        let (sw, holiday) = if use_calendar {
            let mut sw = [0.0; SW_WIDTH];
            sw[..4].copy_from_slice(&input.calendar.season_one_hot());
            sw[4..].copy_from_slice(&input.calendar.weekday_one_hot());
            (sw, input.calendar.holiday_one_hot())
        } else {
            ([0.0; SW_WIDTH], [0.0; HOLIDAY_WIDTH])
        };

        let pair = |a: &[f64], b: &[f64]| [a, b].concat();
        let (a_m, month) = hidden_forward(&self.month, &pair(&input.l_month, &input.t_month), dropout.as_deref_mut())?;
        let (a_w, week) = hidden_forward(&self.week, &pair(&input.l_week, &input.t_week), dropout.as_deref_mut())?;
        let (a_d, day) = hidden_forward(&self.day, &pair(&input.l_day, &input.t_day), dropout.as_deref_mut())?;
        let (a_h, hour) = hidden_forward(&self.hour, l_hour, dropout.as_deref_mut())?;
        let (c1, calendar_fc1) = hidden_forward(&self.calendar_fc1, &sw, dropout.as_deref_mut())?;
        let (c2, calendar_fc2) = hidden_forward(&self.calendar_fc2, &sw, dropout.as_deref_mut())?;
        let (f1, fc1) = hidden_forward(&self.fc1, &[a_h, c1].concat(), dropout.as_deref_mut())?;
        let fc2_in = [&a_m[..], &a_w, &a_d, &c2, &holiday].concat();
        let (f2, fc2) = hidden_forward(&self.fc2, &fc2_in, dropout.as_deref_mut())?;
        let pre_in = [&f1[..], &f2, &[input.t_h]].concat();
        let (p, pre_output) = hidden_forward(&self.pre_output, &pre_in, dropout)?;
        let (out, output) = self.output.forward(&p)?;
        Ok((
            out[0],
            HourCache {
                month,
                week,
                day,
                hour,
                calendar_fc1,
                calendar_fc2,
                fc1,
                fc2,
                pre_output,
                output,
            },
        ))
    }

    /// Accumulates parameter gradients and returns d loss / d `l_hour`.
    pub fn backward(&self, cache: &HourCache, d_out: f64, grads: &mut HourNet) -> Result<[f64; HOUR_WINDOW]> {
        let dp = self.output.backward_into(&cache.output, &[d_out], &mut grads.output)?;
        let d_pre = hidden_backward(&self.pre_output, &cache.pre_output, &dp, &mut grads.pre_output)?;
        let d_fc1 = hidden_backward(&self.fc1, &cache.fc1, &d_pre[..HIDDEN], &mut grads.fc1)?;
        let d_fc2 = hidden_backward(&self.fc2, &cache.fc2, &d_pre[HIDDEN..2 * HIDDEN], &mut grads.fc2)?;

        hidden_backward(&self.month, &cache.month, &d_fc2[..HIDDEN], &mut grads.month)?;
        hidden_backward(&self.week, &cache.week, &d_fc2[HIDDEN..2 * HIDDEN], &mut grads.week)?;
        hidden_backward(&self.day, &cache.day, &d_fc2[2 * HIDDEN..3 * HIDDEN], &mut grads.day)?;
        let c2 = &d_fc2[3 * HIDDEN..3 * HIDDEN + CALENDAR_HIDDEN];
        hidden_backward(&self.calendar_fc2, &cache.calendar_fc2, c2, &mut grads.calendar_fc2)?;
        hidden_backward(&self.calendar_fc1, &cache.calendar_fc1, &d_fc1[HIDDEN..], &mut grads.calendar_fc1)?;
        let d_hour = hidden_backward(&self.hour, &cache.hour, &d_fc1[..HIDDEN], &mut grads.hour)?;

        let mut out = [0.0; HOUR_WINDOW];
        out.copy_from_slice(&d_hour);
        Ok(out)
    }

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for l in z.layers_mut() {
            *l = l.zeros_like();
        }
        z
    }
}

/// 24 hourly subnetworks chained through their recent-load inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicStructure {
    pub hours: Vec<HourNet>,
    pub use_calendar: bool,
    month_lags: usize,
}

#[derive(Debug, Clone)]
pub struct BasicCache {
    hours: Vec<HourCache>,
}

impl BasicStructure {
    pub fn zeroed(month_lags: usize, use_calendar: bool) -> Self {
        Self {
            hours: (0..HOURS).map(|_| HourNet::new(month_lags)).collect(),
            use_calendar,
            month_lags,
        }
    }

    pub fn initialize(&mut self, rng: &mut JobRng) {
        for h in &mut self.hours {
            h.init(rng);
        }
    }

    pub fn month_lags(&self) -> usize {
        self.month_lags
    }

    /// Forecasts hours 1..=24 in order. For hour `h`, the trailing `h - 1`
    /// entries of its recent-load window are the forecasts `L_1 .. L_{h-1}`
    /// produced earlier in the same pass, so gradients flow back through them.
    pub fn forward(
        &self,
        day: &DayInput,
        mut dropout: Option<&mut Dropout<'_>>,
    ) -> Result<([f64; HOURS], BasicCache)> {
        day.validate()?;
        if day.month_lags() != self.month_lags {
            return Err(Error::shape("monthly lags", self.month_lags, day.month_lags()));
        }
        let mut out = [0.0; HOURS];
        let mut caches = Vec::with_capacity(HOURS);
        for (k, (net, input)) in self.hours.iter().zip(&day.hours).enumerate() {
            let mut window = input.l_hour;
            let first_slot = HOUR_WINDOW - k;
            window[first_slot..].copy_from_slice(&out[..k]);
            let (y, cache) = net.forward(input, &window, self.use_calendar, dropout.as_deref_mut())?;
            out[k] = y;
            caches.push(cache);
        }
        Ok((out, BasicCache { hours: caches }))
    }

    pub fn backward(&self, cache: &BasicCache, upstream: &[f64; HOURS], grads: &mut BasicStructure) -> Result<()> {
        if cache.hours.len() != HOURS {
            return Err(Error::Contract("basic-structure cache is incomplete".into()));
        }
        let mut d_out = *upstream;
        for k in (0..HOURS).rev() {
            let d_window = self.hours[k].backward(&cache.hours[k], d_out[k], &mut grads.hours[k])?;
            let first_slot = HOUR_WINDOW - k;
            for (j, g) in d_window[first_slot..].iter().enumerate() {
                d_out[j] += g;
            }
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            hours: self.hours.iter().map(HourNet::zeros_like).collect(),
            use_calendar: self.use_calendar,
            month_lags: self.month_lags,
        }
    }
}

impl Parameters for BasicStructure {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64])) {
        for (k, net) in self.hours.iter().enumerate() {
            for (name, layer) in LAYER_NAMES.iter().zip(net.layers()) {
                layer.visit(&mut |p, s| f(&format!("basic.h{:02}.{name}.{p}", k + 1), s));
            }
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        for (k, net) in self.hours.iter_mut().enumerate() {
            for (name, layer) in LAYER_NAMES.iter().zip(net.layers_mut()) {
                layer.visit_mut(&mut |p, s| f(&format!("basic.h{:02}.{name}.{p}", k + 1), s));
            }
        }
    }
}
