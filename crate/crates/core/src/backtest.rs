//! Daily TopK / TopK-Drop portfolio simulation with proportional fees.
//!
//! Signals for day `t` are computed from data up to `t`, trades execute at
//! day-`t` close and the first P&L is marked at day `t + 1`. Positions are
//! held in fractional shares; there is no shorting and no leverage.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::ops::Range;

use chrono::NaiveDate;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::panel::{PricePanel, ScorePanel, DATE_FORMAT};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "topk")]
    TopK,
    #[serde(rename = "topk_drop")]
    TopKDrop,
}

/// Reference return series for the information ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    /// Mean next-day return of the stocks tradable on the previous day.
    EqualWeight,
    /// One return per simulated day after the first.
    External(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    pub strategy: Strategy,
    /// Portfolio size.
    pub m: usize,
    /// Maximum replacements per day (TopK-Drop).
    pub n: usize,
    /// Fee as a fraction of traded notional, charged on buys and sells.
    pub fee_rate: f64,
    pub initial_capital: f64,
    pub benchmark: Benchmark,
    /// TopK-Drop: re-equalize retained positions whenever the book trades.
    pub reequalize: bool,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::TopKDrop,
            m: 30,
            n: 5,
            fee_rate: 0.001,
            initial_capital: 1_000_000.0,
            benchmark: Benchmark::EqualWeight,
            reequalize: false,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self, n_stocks: Option<usize>) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("backtest: {m}")));
        if self.n < 1 || self.n > self.m {
            return bad(format!("need 1 <= n <= m, got n={} m={}", self.n, self.m));
        }
        if let Some(total) = n_stocks {
            if self.m > total {
                return bad(format!("portfolio size {} exceeds universe of {total}", self.m));
            }
        }
        if !(0.0..0.05).contains(&self.fee_rate) {
            return bad(format!("fee rate {} outside [0, 0.05)", self.fee_rate));
        }
        if !(self.initial_capital > 0.0 && self.initial_capital.is_finite()) {
            return bad("initial capital must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trade<T = f64> {
    pub day: usize,
    pub stock: String,
    pub side: Side,
    pub shares: T,
    pub price: T,
    pub notional: T,
    pub fee: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedTrade {
    pub day: usize,
    pub stock: String,
    pub side: Side,
    pub reason: String,
}

/// Cash plus share counts, indexed like the panel's stocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Book<T> {
    pub shares: Vec<T>,
    pub cash: T,
}

impl<T: Scalar> Book<T> {
    pub fn new(n_stocks: usize, cash: T) -> Self {
        Self {
            shares: vec![T::zero(); n_stocks],
            cash,
        }
    }

    /// Indices with a positive position.
    pub fn held(&self) -> Vec<usize> {
        (0..self.shares.len()).filter(|&i| self.shares[i] > T::zero()).collect()
    }

    /// Cash plus positions valued at `marks`.
    pub fn value(&self, marks: &[T]) -> T {
        self.cash
            + self
                .shares
                .iter()
                .zip(marks)
                .filter(|(s, _)| **s > T::zero())
                .map(|(&s, &p)| s * p)
                .sum::<T>()
    }
}

/// One day's view of the market.
#[derive(Debug, Clone, Copy)]
pub struct Market<'a, T> {
    pub day: usize,
    /// Close of each stock, `None` when missing.
    pub prices: &'a [Option<T>],
    /// Last known close, used to value positions on missing days.
    pub marks: &'a [T],
    pub tradable: &'a [bool],
    pub stock_ids: &'a [String],
}

impl<T: Scalar> Market<'_, T> {
    fn can_trade(&self, i: usize) -> bool {
        self.tradable[i] && self.prices[i].is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepOutcome<T> {
    pub trades: Vec<Trade<T>>,
    pub skipped: Vec<SkippedTrade>,
    /// Fewer than `m` candidates were available.
    pub shortfall: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    /// Stock indices, best first.
    pub stocks: Vec<usize>,
    pub shortfall: bool,
}

/// Stocks with a score, best first; ties by index (stock ids are sorted).
pub fn rank_order<T: Scalar>(scores: &[Option<T>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| scores[i].is_some()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

/// Top `m` scored stocks among those allowed by `eligible`.
pub fn select_topk<T: Scalar>(scores: &[Option<T>], eligible: &[bool], m: usize) -> Selection {
    let stocks: Vec<usize> = rank_order(scores)
        .into_iter()
        .filter(|&i| eligible[i])
        .take(m)
        .collect();
    Selection {
        shortfall: stocks.len() < m,
        stocks,
    }
}

fn sell<T: Scalar>(book: &mut Book<T>, market: &Market<'_, T>, i: usize, shares: T, fee_rate: T) -> Trade<T> {
    let price = market.prices[i].expect("tradable stock has a price");
    let shares = shares.min(book.shares[i]);
    let notional = shares * price;
    let fee = notional * fee_rate;
    book.shares[i] = if shares == book.shares[i] {
        T::zero()
    } else {
        book.shares[i] - shares
    };
    book.cash += notional - fee;
    Trade {
        day: market.day,
        stock: market.stock_ids[i].clone(),
        side: Side::Sell,
        shares,
        price,
        notional,
        fee,
    }
}

fn buy<T: Scalar>(book: &mut Book<T>, market: &Market<'_, T>, i: usize, notional: T, fee_rate: T) -> Trade<T> {
    let price = market.prices[i].expect("tradable stock has a price");
    let fee = notional * fee_rate;
    let shares = notional / price;
    book.shares[i] += shares;
    book.cash -= notional + fee;
    // last buy of a batch can undershoot zero by rounding
    if book.cash < T::zero() {
        book.cash = T::zero();
    }
    Trade {
        day: market.day,
        stock: market.stock_ids[i].clone(),
        side: Side::Buy,
        shares,
        price,
        notional,
        fee,
    }
}

fn dust<T: Scalar>(equity: T) -> T {
    T::lit(1e-12) * equity.max(T::one())
}

/// Spends all cash equally on `names` (fee included).
fn buy_equal<T: Scalar>(
    book: &mut Book<T>,
    market: &Market<'_, T>,
    names: &[usize],
    fee_rate: T,
    equity: T,
    out: &mut StepOutcome<T>,
) {
    if names.is_empty() {
        return;
    }
    if book.cash <= dust(equity) {
        for &i in names {
            out.skipped.push(SkippedTrade {
                day: market.day,
                stock: market.stock_ids[i].clone(),
                side: Side::Buy,
                reason: "insufficient cash".into(),
            });
        }
        return;
    }
    let per_name = book.cash / (T::count(names.len()) * (T::one() + fee_rate));
    for (k, &i) in names.iter().enumerate() {
        let notional = if k + 1 == names.len() {
            book.cash / (T::one() + fee_rate)
        } else {
            per_name
        };
        out.trades.push(buy(book, market, i, notional, fee_rate));
    }
}

/// Target value `x` per name such that selling `sell_value` worth of other
/// positions and moving every name in `values` to `x` spends exactly
/// `wealth` including fees: `k·x + f·Σ|x − v_i| + f·sell_value = wealth`.
fn equal_weight_target<T: Scalar>(values: &[T], wealth: T, sell_value: T, fee_rate: T) -> T {
    let k = values.len();
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite position values"));
    let c = wealth - fee_rate * sell_value;
    let g = |x: T| T::count(k) * x + fee_rate * values.iter().map(|&vi| (x - vi).abs()).sum::<T>() - c;
    // g is increasing and piecewise linear with kinks at the v_i
    let mut lo = T::zero();
    let mut g_lo = g(lo);
    if g_lo >= T::zero() {
        return T::zero();
    }
    for &b in v.iter().filter(|&&b| b > T::zero()) {
        let g_b = g(b);
        if g_b >= T::zero() {
            return lo + (b - lo) * (-g_lo) / (g_b - g_lo);
        }
        lo = b;
        g_lo = g_b;
    }
    // beyond the last kink the slope is k·(1 + f)
    lo - g_lo / (T::count(k) * (T::one() + fee_rate))
}

/// Moves every tradable name in `names` to equal value, selling `exits`
/// entirely; all sells execute before buys.
fn rebalance<T: Scalar>(
    book: &mut Book<T>,
    market: &Market<'_, T>,
    names: &[usize],
    exits: &[usize],
    fee_rate: T,
    equity: T,
    out: &mut StepOutcome<T>,
) {
    let price = |i: usize| market.prices[i].expect("tradable");
    let current: Vec<T> = names.iter().map(|&i| book.shares[i] * price(i)).collect();
    let exit_value: T = exits.iter().map(|&i| book.shares[i] * price(i)).sum();
    let wealth = book.cash + exit_value + current.iter().copied().sum::<T>();
    for &i in exits {
        out.trades.push(sell(book, market, i, book.shares[i], fee_rate));
    }
    if names.is_empty() {
        return;
    }
    let x = equal_weight_target(&current, wealth, exit_value, fee_rate);
    let tol = dust(equity);
    let mut buys = Vec::new();
    for (&i, &v) in names.iter().zip(&current) {
        if v - x > tol {
            let shares = if x <= T::zero() {
                book.shares[i]
            } else {
                (v - x) / price(i)
            };
            out.trades.push(sell(book, market, i, shares, fee_rate));
        } else if x - v > tol {
            buys.push((i, x - v));
        }
    }
    for (k, &(i, want)) in buys.iter().enumerate() {
        let affordable = book.cash / (T::one() + fee_rate);
        let notional = if k + 1 == buys.len() {
            affordable
        } else {
            want.min(affordable)
        };
        if notional <= tol {
            out.skipped.push(SkippedTrade {
                day: market.day,
                stock: market.stock_ids[i].clone(),
                side: Side::Buy,
                reason: "insufficient cash".into(),
            });
            continue;
        }
        out.trades.push(buy(book, market, i, notional, fee_rate));
    }
}

fn eligible<T: Scalar>(market: &Market<'_, T>) -> Vec<bool> {
    (0..market.prices.len()).map(|i| market.can_trade(i)).collect()
}

fn blocked(market: &Market<'_, impl Scalar>, i: usize, side: Side) -> SkippedTrade {
    SkippedTrade {
        day: market.day,
        stock: market.stock_ids[i].clone(),
        side,
        reason: "not tradable".into(),
    }
}

/// One TopK-Drop rebalance.
///
/// Holdings inside today's top `m` are kept. Of the holdings outside it, at
/// most `n` are sold, worst-ranked first (unscored counts as worst). Free
/// slots are filled with the best-ranked target names not yet held, buying
/// equal amounts with the available cash. Untradable holdings stay put.
pub fn topk_drop_step<T: Scalar>(
    book: &mut Book<T>,
    scores: &[Option<T>],
    market: &Market<'_, T>,
    config: &BacktestConfig,
) -> StepOutcome<T> {
    let fee = T::lit(config.fee_rate);
    let equity = book.value(market.marks);
    let sel = select_topk(scores, &eligible(market), config.m);
    let mut out = StepOutcome {
        shortfall: sel.shortfall,
        ..Default::default()
    };
    let target: BTreeSet<usize> = sel.stocks.iter().copied().collect();
    let held = book.held();
    let order = rank_order(scores);
    let position: BTreeMap<usize, usize> = order.iter().enumerate().map(|(r, &i)| (i, r)).collect();
    let mut outside: Vec<usize> = held.iter().copied().filter(|i| !target.contains(i)).collect();
    outside.sort_by_key(|i| std::cmp::Reverse((position.get(i).copied().unwrap_or(usize::MAX), *i)));
    let mut sold = Vec::new();
    for i in outside {
        if sold.len() == config.n {
            break;
        }
        if !market.can_trade(i) {
            out.skipped.push(blocked(market, i, Side::Sell));
            continue;
        }
        out.trades.push(sell(book, market, i, book.shares[i], fee));
        sold.push(i);
    }
    let slots = config.m.saturating_sub(held.len() - sold.len());
    let buys: Vec<usize> = sel
        .stocks
        .iter()
        .copied()
        .filter(|i| book.shares[*i] <= T::zero() && !sold.contains(i))
        .take(slots)
        .collect();
    if config.reequalize && !(sold.is_empty() && buys.is_empty()) {
        let mut names: Vec<usize> = book.held().into_iter().filter(|&i| market.can_trade(i)).collect();
        names.extend(&buys);
        rebalance(book, market, &names, &[], fee, equity, &mut out);
    } else {
        buy_equal(book, market, &buys, fee, equity, &mut out);
    }
    out
}

/// One TopK rebalance: sell everything outside today's top `m` and bring
/// the top `m` to equal value. Untradable holdings stay put and take up
/// portfolio slots.
pub fn topk_step<T: Scalar>(
    book: &mut Book<T>,
    scores: &[Option<T>],
    market: &Market<'_, T>,
    config: &BacktestConfig,
) -> StepOutcome<T> {
    let fee = T::lit(config.fee_rate);
    let equity = book.value(market.marks);
    let held = book.held();
    let frozen: Vec<usize> = held.iter().copied().filter(|&i| !market.can_trade(i)).collect();
    let slots = config.m.saturating_sub(frozen.len());
    let sel = select_topk(scores, &eligible(market), config.m);
    let mut out = StepOutcome {
        shortfall: sel.shortfall,
        ..Default::default()
    };
    let names: Vec<usize> = sel.stocks.iter().copied().take(slots).collect();
    let exits: Vec<usize> = held
        .iter()
        .copied()
        .filter(|i| market.can_trade(*i) && !names.contains(i))
        .collect();
    for &i in &frozen {
        if sel.stocks.contains(&i) {
            out.skipped.push(blocked(market, i, Side::Buy));
        }
    }
    rebalance(book, market, &names, &exits, fee, equity, &mut out);
    out
}

/// Simulation output; per-day vectors are aligned with `dates`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioState<T = f64> {
    pub stock_ids: Vec<String>,
    pub days: Range<usize>,
    pub dates: Vec<NaiveDate>,
    /// Final share counts.
    pub holdings: BTreeMap<String, T>,
    pub cash: T,
    /// Post-trade equity per day.
    pub equity_curve: Vec<T>,
    /// Cash per day after trading.
    pub cash_curve: Vec<T>,
    /// `R_p` for every day after the first; the first is measured against
    /// the initial capital so opening fees count.
    pub daily_returns: Vec<T>,
    pub benchmark_returns: Vec<T>,
    /// Traded notional over pre-trade equity.
    pub turnover: Vec<T>,
    pub traded_notional: Vec<T>,
    pub fees: Vec<T>,
    /// Held stock indices after each day's trades.
    pub held: Vec<Vec<usize>>,
    pub trades: Vec<Trade<T>>,
    pub skipped: Vec<SkippedTrade>,
    pub shortfall_days: Vec<usize>,
    pub initial_capital: T,
}

impl<T: Scalar> PortfolioState<T> {
    pub fn total_fees(&self) -> T {
        self.fees.iter().copied().sum()
    }

    pub fn cumulative_fees(&self) -> Vec<T> {
        self.fees
            .iter()
            .scan(T::zero(), |acc, &f| {
                *acc += f;
                Some(*acc)
            })
            .collect()
    }

    /// Cumulative return `Π(1 + R_p) − 1` after each day.
    pub fn cumulative_returns(&self) -> Vec<T> {
        self.equity_curve
            .iter()
            .map(|&e| e / self.initial_capital - T::one())
            .collect()
    }
}

fn check_range<T: Scalar>(panel: &PricePanel<T>, days: &Range<usize>) -> Result<()> {
    if days.end > panel.n_days() || days.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "backtest needs at least two days inside the panel, got {days:?} of {}",
            panel.n_days()
        )));
    }
    Ok(())
}

fn simulate<T: Scalar>(
    panel: &PricePanel<T>,
    days: Range<usize>,
    capital: T,
    benchmark: &Benchmark,
    mut step: impl FnMut(&mut Book<T>, &Market<'_, T>) -> Result<StepOutcome<T>>,
) -> Result<PortfolioState<T>> {
    check_range(panel, &days)?;
    let n = panel.n_stocks();
    let mut book = Book::new(n, capital);
    let mut marks = vec![T::nan(); n];
    let mut state = PortfolioState {
        stock_ids: panel.stock_ids().to_vec(),
        days: days.clone(),
        dates: panel.calendar()[days.clone()].to_vec(),
        holdings: BTreeMap::new(),
        cash: capital,
        equity_curve: Vec::with_capacity(days.len()),
        cash_curve: Vec::with_capacity(days.len()),
        daily_returns: Vec::with_capacity(days.len() - 1),
        benchmark_returns: Vec::with_capacity(days.len() - 1),
        turnover: Vec::with_capacity(days.len()),
        traded_notional: Vec::with_capacity(days.len()),
        fees: Vec::with_capacity(days.len()),
        held: Vec::with_capacity(days.len()),
        trades: Vec::new(),
        skipped: Vec::new(),
        shortfall_days: Vec::new(),
        initial_capital: capital,
    };
    for t in days.clone() {
        let prices: Vec<Option<T>> = (0..n).map(|i| panel.close(i, t)).collect();
        for (m, p) in marks.iter_mut().zip(&prices) {
            if let Some(p) = p {
                *m = *p;
            }
        }
        let tradable: Vec<bool> = (0..n).map(|i| panel.is_tradable(i, t)).collect();
        for i in book.held() {
            if prices[i].is_none() {
                warn!(
                    "{}: no price for held {}; position frozen at last close",
                    panel.calendar()[t],
                    panel.stock_ids()[i]
                );
            }
        }
        let pre = book.value(&marks);
        let (mut notional, mut fees) = (T::zero(), T::zero());
        if t + 1 < days.end {
            let market = Market {
                day: t,
                prices: &prices,
                marks: &marks,
                tradable: &tradable,
                stock_ids: panel.stock_ids(),
            };
            let out = step(&mut book, &market)?;
            for tr in &out.trades {
                notional += tr.notional;
                fees += tr.fee;
            }
            if out.shortfall {
                state.shortfall_days.push(t);
            }
            state.trades.extend(out.trades);
            state.skipped.extend(out.skipped);
        }
        let post = book.value(&marks);
        state
            .turnover
            .push(if pre > T::zero() { notional / pre } else { T::zero() });
        state.traded_notional.push(notional);
        state.fees.push(fees);
        state.cash_curve.push(book.cash);
        state.held.push(book.held());
        let prev = state.equity_curve.last().copied().unwrap_or(capital);
        if t > days.start {
            state.daily_returns.push(post / prev - T::one());
        }
        state.equity_curve.push(post);
    }
    state.benchmark_returns = match benchmark {
        Benchmark::EqualWeight => equal_weight_benchmark(panel, days.clone()),
        Benchmark::External(series) => {
            if series.len() != days.len() - 1 {
                return Err(Error::InvalidArgument(format!(
                    "external benchmark has {} returns, expected {}",
                    series.len(),
                    days.len() - 1
                )));
            }
            series.iter().map(|&r| T::lit(r)).collect()
        }
    };
    state.cash = book.cash;
    state.holdings = book
        .held()
        .into_iter()
        .map(|i| (panel.stock_ids()[i].clone(), book.shares[i]))
        .collect();
    Ok(state)
}

/// Mean return on each day `t > start` of the stocks tradable on `t − 1`
/// with a close on `t`; 0 when no stock qualifies.
pub fn equal_weight_benchmark<T: Scalar>(panel: &PricePanel<T>, days: Range<usize>) -> Vec<T> {
    (days.start + 1..days.end)
        .map(|t| {
            let rets: Vec<T> = (0..panel.n_stocks())
                .filter(|&i| panel.is_tradable(i, t - 1))
                .filter_map(|i| Some(panel.close(i, t)? / panel.close(i, t - 1)? - T::one()))
                .collect();
            crate::stats::mean(&rets).unwrap_or_else(T::zero)
        })
        .collect()
}

/// Runs a strategy over `days`, trading on every day but the last.
///
/// `scores` must hold at least one score on every trading day.
pub fn run_backtest<T: Scalar>(
    scores: &ScorePanel<T>,
    panel: &PricePanel<T>,
    config: &BacktestConfig,
    days: Range<usize>,
) -> Result<PortfolioState<T>> {
    config.validate(Some(panel.n_stocks()))?;
    if scores.stock_ids != panel.stock_ids() || scores.calendar != panel.calendar() {
        return Err(Error::InvalidArgument(
            "scores are not aligned with the price panel".into(),
        ));
    }
    simulate(
        panel,
        days,
        T::lit(config.initial_capital),
        &config.benchmark,
        |book, market| {
            let s = scores.day(market.day);
            if s.iter().all(Option::is_none) {
                return Err(Error::InsufficientData(format!("no scores for day {}", market.day)));
            }
            Ok(match config.strategy {
                Strategy::TopK => topk_step(book, &s, market, config),
                Strategy::TopKDrop => topk_drop_step(book, &s, market, config),
            })
        },
    )
}

/// Re-executes a trade log's share quantities at the same closes with a
/// different fee rate.
///
/// Holding quantities fixed isolates the fee effect: the result's equity
/// minus the original run's cumulative fees equals the original equity
/// when the original rate was applied to the same notionals.
pub fn replay_trades<T: Scalar>(
    panel: &PricePanel<T>,
    days: Range<usize>,
    trades: &[Trade<T>],
    fee_rate: T,
    initial_capital: T,
    benchmark: &Benchmark,
) -> Result<PortfolioState<T>> {
    let mut by_day: BTreeMap<usize, Vec<&Trade<T>>> = BTreeMap::new();
    for tr in trades {
        by_day.entry(tr.day).or_default().push(tr);
    }
    simulate(panel, days, initial_capital, benchmark, |book, market| {
        let mut out = StepOutcome::default();
        for tr in by_day.get(&market.day).into_iter().flatten() {
            let i = panel
                .stock_index(&tr.stock)
                .ok_or_else(|| Error::InvalidArgument(format!("trade for unknown stock {}", tr.stock)))?;
            let price = market.prices[i]
                .ok_or_else(|| Error::InvalidArgument(format!("trade for {} on a day without price", tr.stock)))?;
            let notional = tr.shares * price;
            let fee = notional * fee_rate;
            match tr.side {
                Side::Buy => {
                    book.shares[i] += tr.shares;
                    book.cash -= notional + fee;
                }
                Side::Sell => {
                    book.shares[i] = if tr.shares >= book.shares[i] {
                        T::zero()
                    } else {
                        book.shares[i] - tr.shares
                    };
                    book.cash += notional - fee;
                }
            }
            if book.cash < -dust(initial_capital) {
                return Err(Error::InvalidArgument(format!(
                    "replay overdraws cash on day {}",
                    market.day
                )));
            }
            out.trades.push(Trade {
                notional,
                fee,
                price,
                ..(*tr).clone()
            });
        }
        Ok(out)
    })
}

fn fmt_date(d: &NaiveDate) -> String {
    d.format(DATE_FORMAT).to_string()
}

/// `date,equity,cash,daily_return,benchmark_return,turnover,traded_notional,fees`.
pub fn write_equity_csv<T: Scalar, W: Write>(state: &PortfolioState<T>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "date",
        "equity",
        "cash",
        "daily_return",
        "benchmark_return",
        "turnover",
        "traded_notional",
        "fees",
    ])?;
    for k in 0..state.equity_curve.len() {
        let opt = |v: &[T]| {
            k.checked_sub(1)
                .and_then(|j| v.get(j))
                .map(|x| x.to_string())
                .unwrap_or_default()
        };
        w.write_record([
            fmt_date(&state.dates[k]),
            state.equity_curve[k].to_string(),
            state.cash_curve[k].to_string(),
            opt(&state.daily_returns),
            opt(&state.benchmark_returns),
            state.turnover[k].to_string(),
            state.traded_notional[k].to_string(),
            state.fees[k].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `date,stock_id,side,shares,price,notional,fee`.
pub fn write_trades_csv<T: Scalar, W: Write>(
    state: &PortfolioState<T>,
    calendar: &[NaiveDate],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "stock_id", "side", "shares", "price", "notional", "fee"])?;
    for tr in &state.trades {
        w.write_record([
            fmt_date(&calendar[tr.day]),
            tr.stock.clone(),
            match tr.side {
                Side::Buy => "buy".into(),
                Side::Sell => "sell".into(),
            },
            tr.shares.to_string(),
            tr.price.to_string(),
            tr.notional.to_string(),
            tr.fee.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
