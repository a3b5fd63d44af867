use std::collections::BTreeMap;

use crate::schema::{flight_violations, hotel_violations, Inventory, ObjectiveKind, TravelRequest};
use crate::solver::{Problem, Sense, VarKind};
use crate::timegrid::{Rules, TimeGrid};

use super::{
    BigM, CandidateStay, FlightCandidate, MilpModel, ModelError, ObjectiveWeights, VarTag, AIR,
};

/// Right-hand side of a conditional equality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operand {
    Var(usize),
    Const(f64),
}

/// Drop offers that violate a hard constraint of the request. Soft time
/// windows never remove an offer; they only cost a penalty.
pub fn filter_offers(request: &TravelRequest, inventory: &Inventory) -> Inventory {
    Inventory {
        schema_version: inventory.schema_version,
        flights: inventory
            .flights
            .iter()
            .filter(|f| flight_violations(f, request).is_empty())
            .cloned()
            .collect(),
        hotels: inventory
            .hotels
            .iter()
            .filter(|h| hotel_violations(h, request).is_empty())
            .cloned()
            .collect(),
    }
}

/// Append `x = y if every guard is 1` as two big-M rows with the tightest
/// valid M, recording M in `registry`.
///
/// Rows: `x - y + M*sum(z) <= M*k` and `y - x + M*sum(z) <= M*k` for `k` guards.
pub fn add_conditional_equality(
    problem: &mut Problem,
    registry: &mut Vec<BigM>,
    label: &str,
    guards: &[usize],
    x: usize,
    y: Operand,
) -> Result<[usize; 2], ModelError> {
    assert!(!guards.is_empty(), "conditional equality needs at least one guard");
    let xv = &problem.vars[x];
    let (ylo, yhi) = match y {
        Operand::Var(j) => (problem.vars[j].lb, problem.vars[j].ub),
        Operand::Const(c) => (c, c),
    };
    let m = (xv.ub - ylo).max(yhi - xv.lb).max(0.0);
    if !m.is_finite() {
        let name = match y {
            Operand::Var(j) if !(ylo.is_finite() && yhi.is_finite()) => problem.vars[j].name.clone(),
            _ => xv.name.clone(),
        };
        return Err(ModelError::UnboundedVariable(name));
    }
    let k = guards.len() as f64;
    let mut rows = [0usize; 2];
    for (side, sign) in [(0usize, 1.0), (1, -1.0)] {
        let mut coeffs = vec![(x, sign)];
        let mut rhs = m * k;
        match y {
            Operand::Var(j) => coeffs.push((j, -sign)),
            Operand::Const(c) => rhs += sign * c,
        }
        coeffs.extend(guards.iter().map(|&z| (z, m)));
        let name = format!("{label}_{}", if side == 0 { "le" } else { "ge" });
        rows[side] = problem.add_row(name, coeffs, Sense::Le, rhs);
    }
    registry.push(BigM { rows, m });
    Ok(rows)
}

fn add_var(problem: &mut Problem, tags: &mut Vec<VarTag>, name: String, tag: VarTag, cost: f64) -> usize {
    tags.push(tag);
    problem.add_var(name, VarKind::Binary, 0.0, 1.0, cost)
}

/// Compile the request into a binary program on `grid`.
pub fn build_model(
    request: &TravelRequest,
    inventory: &Inventory,
    objective: ObjectiveKind,
    grid: &TimeGrid,
    rules: &Rules,
) -> Result<MilpModel, ModelError> {
    let weights = ObjectiveWeights::default();
    let inventory = filter_offers(request, inventory);
    let t_count = grid.slots;
    let mut locations: Vec<String> = request.cities().iter().map(|c| c.as_str().to_string()).collect();
    locations.push(AIR.to_string());
    let air = locations.len() - 1;
    let loc = |code: &str| locations.iter().position(|l| l == code).expect("request city");

    // Flights that can serve their segment on its date.
    let mut flights = Vec::new();
    for (i, f) in inventory.flights.iter().enumerate() {
        let Some(seg) = request.segments.get(f.segment) else {
            continue;
        };
        if f.departure.date() != seg.date {
            continue;
        }
        let slots = grid.flight_slots(f);
        if slots.land >= t_count {
            continue;
        }
        if !slots.fits_grid() {
            return Err(ModelError::GridTooCoarse {
                flight: f.id.clone(),
                slot_minutes: grid.slot_minutes,
            });
        }
        flights.push(FlightCandidate {
            offer: i,
            segment: f.segment,
            slots,
            var: usize::MAX,
        });
    }
    for (k, seg) in request.segments.iter().enumerate() {
        if !flights.iter().any(|c| c.segment == k) {
            return Err(ModelError::EmptySegment {
                segment: k,
                route: format!("{}->{} on {}", seg.origin, seg.destination, seg.date),
            });
        }
    }

    let blocks = request.away_blocks();
    let mut stays = Vec::new();
    for (b, block) in blocks.iter().enumerate() {
        for (i, h) in inventory.hotels.iter().enumerate() {
            if h.city == block.city && h.available_for(block.check_in, block.check_out) {
                stays.push(CandidateStay {
                    hotel: i,
                    block: b,
                    check_in: block.check_in,
                    check_out: block.check_out,
                    slots: grid.stay_slots(h, block.check_in, block.check_out),
                    cost: h.nightly_price_cents * block.nights(),
                    var: usize::MAX,
                });
            }
        }
    }
    let nights: Vec<_> = blocks
        .iter()
        .flat_map(|b| b.night_dates().map(|d| (d, grid.evening_slots(d))).collect::<Vec<_>>())
        .collect();

    let mut problem = Problem::default();
    let mut tags = Vec::new();
    let u: Vec<Vec<usize>> = locations
        .iter()
        .enumerate()
        .map(|(l, code)| {
            (0..t_count)
                .map(|t| {
                    add_var(
                        &mut problem,
                        &mut tags,
                        format!("u_{code}_t{t}"),
                        VarTag::Location { location: l, slot: t },
                        0.0,
                    )
                })
                .collect()
        })
        .collect();
    let home = loc(request.home().as_str());
    if t_count > 0 {
        problem.vars[u[home][0]].lb = 1.0;
    }
    let e: Vec<usize> = (0..t_count.saturating_sub(1))
        .map(|t| add_var(&mut problem, &mut tags, format!("e_t{t}"), VarTag::Event { slot: t }, 0.0))
        .collect();
    let mut m = vec![None; t_count];
    for (_, range) in &nights {
        for t in range.clone() {
            m[t] = Some(add_var(&mut problem, &mut tags, format!("m_t{t}"), VarTag::Sleep { slot: t }, 0.0));
        }
    }

    let scale_pen = |pen: i64| match objective {
        ObjectiveKind::MinCost => pen,
        _ => 1000 * pen,
    };
    for (c, cand) in flights.iter_mut().enumerate() {
        let f = &inventory.flights[cand.offer];
        let pen = scale_pen(rules.soft_penalty(f, &request.airline_constraints));
        let price = f.price_cents;
        let money = match objective {
            ObjectiveKind::MinCost => price,
            ObjectiveKind::BetterHotel => 1000 * price,
            ObjectiveKind::BetterFlight => {
                (1000 - weights.lambda_flight) * price
                    - weights.lambda_flight * f.cabin.quality_level() * weights.flight_quality_cents
            }
        };
        cand.var = add_var(
            &mut problem,
            &mut tags,
            format!("f_{c}"),
            VarTag::Flight { candidate: c },
            (money + pen) as f64,
        );
    }
    for (s, stay) in stays.iter_mut().enumerate() {
        let h = &inventory.hotels[stay.hotel];
        let nights = (stay.check_out - stay.check_in).num_days();
        let cost = match objective {
            ObjectiveKind::MinCost => stay.cost,
            ObjectiveKind::BetterHotel => {
                (1000 - weights.lambda_hotel) * stay.cost
                    - weights.lambda_hotel * nights * i64::from(h.rating) * weights.hotel_star_cents
            }
            ObjectiveKind::BetterFlight => 1000 * stay.cost,
        };
        stay.var = add_var(&mut problem, &mut tags, format!("h_{s}"), VarTag::Hotel { stay: s }, cost as f64);
    }

    let mut big_m = Vec::new();

    // One location per slot, and locations change only on event slots.
    for t in 0..t_count {
        let coeffs = u.iter().map(|row| (row[t], 1.0)).collect();
        problem.add_row(format!("onehot_t{t}"), coeffs, Sense::Eq, 1.0);
    }
    for (l, code) in locations.iter().enumerate() {
        for t in 0..t_count.saturating_sub(1) {
            let (a, b) = (u[l][t], u[l][t + 1]);
            problem.add_row(format!("stay_{code}_t{t}_in"), vec![(b, 1.0), (a, -1.0), (e[t], -1.0)], Sense::Le, 0.0);
            problem.add_row(format!("stay_{code}_t{t}_out"), vec![(a, 1.0), (b, -1.0), (e[t], -1.0)], Sense::Le, 0.0);
        }
    }

    // Flight timelines.
    let mut event_flights: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (c, cand) in flights.iter().enumerate() {
        let seg = &request.segments[cand.segment];
        let (src, dst) = (loc(seg.origin.as_str()), loc(seg.destination.as_str()));
        let (dep, land) = (cand.slots.depart, cand.slots.land);
        let f = cand.var;
        let pins = [
            ("src", u[src][dep]),
            ("up", u[air][dep + 1]),
            ("dst", u[dst][land]),
            ("down", u[air][land - 1]),
            ("dep_event", e[dep]),
            ("land_event", e[land - 1]),
        ];
        for (what, x) in pins {
            add_conditional_equality(&mut problem, &mut big_m, &format!("f{c}_{what}"), &[f], x, Operand::Const(1.0))?;
        }
        event_flights.entry(dep).or_default().push(f);
        event_flights.entry(land - 1).or_default().push(f);
    }
    for (t, &ev) in e.iter().enumerate() {
        let mut coeffs = vec![(ev, 1.0)];
        if let Some(fs) = event_flights.get(&t) {
            coeffs.extend(fs.iter().map(|&f| (f, -1.0)));
        }
        problem.add_row(format!("event_t{t}"), coeffs, Sense::Le, 0.0);
    }
    for k in 0..request.segments.len() {
        let coeffs = flights.iter().filter(|c| c.segment == k).map(|c| (c.var, 1.0)).collect();
        problem.add_row(format!("segment_{k}"), coeffs, Sense::Eq, 1.0);
        if k > 0 {
            let mut coeffs: Vec<(usize, f64)> = flights
                .iter()
                .filter(|c| c.segment == k)
                .map(|c| (c.var, c.slots.depart as f64))
                .collect();
            coeffs.extend(
                flights
                    .iter()
                    .filter(|c| c.segment == k - 1)
                    .map(|c| (c.var, -(c.slots.land as f64))),
            );
            problem.add_row(format!("order_{k}"), coeffs, Sense::Ge, 0.0);
        }
    }

    // Sleep and hotels.
    let min_sleep_slots = rules.min_sleep_slots();
    for (night, range) in &nights {
        let coeffs = range.clone().filter_map(|t| m[t].map(|v| (v, 1.0))).collect();
        problem.add_row(format!("sleep_{night}"), coeffs, Sense::Ge, min_sleep_slots as f64);
    }
    for (b, _) in blocks.iter().enumerate() {
        let coeffs = stays.iter().filter(|s| s.block == b).map(|s| (s.var, 1.0)).collect();
        problem.add_row(format!("block_{b}"), coeffs, Sense::Eq, 1.0);
    }
    for (t, mv) in m.iter().enumerate() {
        let Some(mv) = *mv else { continue };
        let mut coeffs = vec![(mv, 1.0)];
        coeffs.extend(stays.iter().filter(|s| s.slots.contains(&t)).map(|s| (s.var, -1.0)));
        problem.add_row(format!("cover_t{t}"), coeffs, Sense::Le, 0.0);
    }
    for (s, stay) in stays.iter().enumerate() {
        let city = loc(inventory.hotels[stay.hotel].city.as_str());
        for t in stay.slots.clone() {
            let Some(mv) = m[t] else { continue };
            // h = 1 implies u_city(t) >= m(t); M = 1 is the largest possible violation.
            let row = problem.add_row(
                format!("hotel{s}_t{t}"),
                vec![(u[city][t], 1.0), (mv, -1.0), (stay.var, -1.0)],
                Sense::Ge,
                -1.0,
            );
            big_m.push(BigM { rows: [row, row], m: 1.0 });
        }
    }

    // Budgets.
    let budget = &request.budget;
    if let Some(cap) = budget.flight_total_budget {
        let coeffs = flights
            .iter()
            .map(|c| (c.var, inventory.flights[c.offer].price_cents as f64))
            .collect();
        problem.add_row("budget_flight_total", coeffs, Sense::Le, cap as f64);
    }
    if let Some(cap) = budget.hotel_total_budget {
        let coeffs = stays.iter().map(|s| (s.var, s.cost as f64)).collect();
        problem.add_row("budget_hotel_total", coeffs, Sense::Le, cap as f64);
    }
    if let Some(cap) = budget.hotel_daily_budget {
        for (night, _) in &nights {
            let coeffs: Vec<(usize, f64)> = stays
                .iter()
                .filter(|s| s.check_in <= *night && *night < s.check_out)
                .map(|s| (s.var, inventory.hotels[s.hotel].nightly_price_cents as f64))
                .collect();
            if !coeffs.is_empty() {
                problem.add_row(format!("budget_hotel_daily_{night}"), coeffs, Sense::Le, cap as f64);
            }
        }
    }
    if let Some(cap) = budget.total_budget {
        let mut coeffs: Vec<(usize, f64)> = flights
            .iter()
            .map(|c| (c.var, inventory.flights[c.offer].price_cents as f64))
            .collect();
        coeffs.extend(stays.iter().map(|s| (s.var, s.cost as f64)));
        problem.add_row("budget_total", coeffs, Sense::Le, cap as f64);
    }

    Ok(MilpModel {
        problem,
        tags,
        objective,
        weights,
        request: request.clone(),
        inventory,
        grid: grid.clone(),
        rules: *rules,
        locations,
        blocks,
        flights,
        stays,
        u,
        e,
        m,
        nights,
        min_sleep_slots,
        big_m,
    })
}
