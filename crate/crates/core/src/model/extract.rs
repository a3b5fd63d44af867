use crate::schema::{HotelStay, Itinerary, SCHEMA_VERSION};

use super::{MilpModel, ModelError};

const ROW_TOL: f64 = 1e-6;
const INT_TOL: f64 = 1e-6;

/// A discrete choice: one flight candidate per segment, one stay per block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub flights: Vec<usize>,
    pub stays: Vec<usize>,
}

/// Full variable assignment realizing `selection`: the traveller waits at
/// home, flies each chosen flight, and sleeps in every evening slot where a
/// booked hotel covers the slot in the city they are in.
pub fn assignment_for(model: &MilpModel, selection: &Selection) -> Vec<f64> {
    let mut x = vec![0.0; model.problem.num_vars()];
    let t_count = model.grid.slots;
    let home = model
        .location_index(model.request.home().as_str())
        .expect("home is a model location");
    let mut location = vec![home; t_count];
    for &c in &selection.flights {
        let cand = &model.flights[c];
        x[cand.var] = 1.0;
        let seg = &model.request.segments[cand.segment];
        let dst = model
            .location_index(seg.destination.as_str())
            .expect("destination is a model location");
        for (t, l) in location.iter_mut().enumerate().skip(cand.slots.depart + 1) {
            *l = if t < cand.slots.land { model.air() } else { dst };
        }
        for t in [cand.slots.depart, cand.slots.land - 1] {
            if let Some(&ev) = model.e.get(t) {
                x[ev] = 1.0;
            }
        }
    }
    for (t, &l) in location.iter().enumerate() {
        x[model.u[l][t]] = 1.0;
    }
    for &s in &selection.stays {
        x[model.stays[s].var] = 1.0;
    }
    for (t, mv) in model.m.iter().enumerate() {
        let Some(mv) = *mv else { continue };
        let mut covering = selection
            .stays
            .iter()
            .map(|&s| &model.stays[s])
            .filter(|s| s.slots.contains(&t))
            .peekable();
        let asleep = covering.peek().is_some()
            && covering.all(|s| {
                let city = model.inventory.hotels[s.hotel].city.as_str();
                model.location_index(city) == Some(location[t])
            });
        if asleep {
            x[mv] = 1.0;
        }
    }
    x
}

/// Read the itinerary off an integral assignment that satisfies every row.
pub fn extract_itinerary(model: &MilpModel, assignment: &[f64]) -> Result<Itinerary, ModelError> {
    for (v, def) in assignment.iter().zip(&model.problem.vars) {
        if def.kind.is_integer() && (v - v.round()).abs() > INT_TOL {
            return Err(ModelError::FractionalAssignment(def.name.clone()));
        }
    }
    let bad = model.problem.audit(assignment, ROW_TOL, INT_TOL);
    if !bad.is_empty() {
        let shown: Vec<&str> = bad.iter().take(5).map(String::as_str).collect();
        let more = if bad.len() > 5 {
            format!(" (+{} more)", bad.len() - 5)
        } else {
            String::new()
        };
        return Err(ModelError::InconsistentAssignment(format!("{}{more}", shown.join("; "))));
    }
    let on = |var: usize| assignment[var] > 0.5;

    let mut chosen_flights = Vec::new();
    let mut flight_cost = 0;
    for k in 0..model.request.segments.len() {
        for (_, cand) in model.segment_candidates(k) {
            if on(cand.var) {
                let offer = &model.inventory.flights[cand.offer];
                chosen_flights.push(offer.id.clone());
                flight_cost += offer.price_cents;
            }
        }
    }
    let mut hotel_stays = Vec::new();
    let mut hotel_cost = 0;
    for b in 0..model.blocks.len() {
        for (_, stay) in model.block_stays(b) {
            if on(stay.var) {
                hotel_stays.push(HotelStay {
                    hotel_id: model.inventory.hotels[stay.hotel].id.clone(),
                    check_in: stay.check_in,
                    check_out: stay.check_out,
                });
                hotel_cost += stay.cost;
            }
        }
    }
    let objective_value = model.problem.objective_value(assignment).round() as i64;
    Ok(Itinerary {
        schema_version: SCHEMA_VERSION,
        request_id: model.request.request_id.clone(),
        chosen_flights,
        hotel_stays,
        flight_cost,
        hotel_cost,
        total_cost: flight_cost + hotel_cost,
        objective_kind: model.objective,
        objective_value,
        slot_minutes: model.grid.slot_minutes,
    })
}

fn argmax<'a>(items: impl Iterator<Item = (usize, usize)> + 'a, values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (idx, var) in items {
        let v = values[var];
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((idx, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Round an LP solution: keep it if already integral and feasible, else take
/// the largest flight per segment and the largest stay per block, rebuild the
/// timeline, and keep the result only if it satisfies every row.
pub fn rounding_heuristic(model: &MilpModel, lp_values: &[f64]) -> Option<Vec<f64>> {
    let integral = lp_values
        .iter()
        .zip(&model.problem.vars)
        .all(|(v, d)| !d.kind.is_integer() || (v - v.round()).abs() <= INT_TOL);
    if integral {
        let rounded: Vec<f64> = lp_values.iter().map(|v| v.round()).collect();
        if model.problem.audit(&rounded, ROW_TOL, INT_TOL).is_empty() {
            return Some(rounded);
        }
    }
    let flights = (0..model.request.segments.len())
        .map(|k| argmax(model.segment_candidates(k).map(|(i, c)| (i, c.var)), lp_values))
        .collect::<Option<Vec<_>>>()?;
    let stays = (0..model.blocks.len())
        .map(|b| argmax(model.block_stays(b).map(|(i, s)| (i, s.var)), lp_values))
        .collect::<Option<Vec<_>>>()?;
    let x = assignment_for(model, &Selection { flights, stays });
    model
        .problem
        .audit(&x, ROW_TOL, INT_TOL)
        .is_empty()
        .then_some(x)
}
