//! The three simple comparators: ITT, exclusion and censoring at switch.

use super::{cox_by_arm, require_both_arms, AdjustmentResult, Method};
use crate::data::{Arm, Dataset, PatientRecord};
use crate::error::{Error, Result};
use crate::survival::SurvSample;

fn observed(p: &PatientRecord) -> SurvSample {
    SurvSample::new(p.observed_time, p.event, p.arm.group())
}

/// Randomized comparison on observed data; switching is ignored.
pub fn itt(d: &Dataset) -> Result<AdjustmentResult> {
    require_both_arms(d)?;
    let samples: Vec<_> = d.patients().iter().map(observed).collect();
    cox_by_arm(Method::Itt, &samples)
}

pub fn exclude_switchers(d: &Dataset) -> Result<AdjustmentResult> {
    let kept: Vec<&PatientRecord> = d.patients().iter().filter(|p| !p.is_switcher()).collect();
    let n = |arm: Arm| kept.iter().filter(|p| p.arm == arm).count();
    if n(Arm::Control) == 0 || n(Arm::Treatment) == 0 || !kept.iter().any(|p| p.event) {
        return Err(Error::EmptyArmAfterExclusion);
    }
    let samples: Vec<_> = kept.into_iter().map(observed).collect();
    let mut r = cox_by_arm(Method::Exclude, &samples)?;
    r.diag("n_excluded", d.n_switchers());
    Ok(r)
}

/// Switchers become censored at their switch time.
pub fn censor_at_switch(d: &Dataset) -> Result<AdjustmentResult> {
    require_both_arms(d)?;
    let samples: Vec<SurvSample> = d
        .patients()
        .iter()
        .map(|p| match p.switch {
            Some(sw) => SurvSample::new(sw.time, false, p.arm.group()),
            None => observed(p),
        })
        .collect();
    if !samples.iter().any(|s| s.event) {
        return Err(Error::NoEventsAfterRecoding);
    }
    let mut r = cox_by_arm(Method::CensorAtSwitch, &samples)?;
    r.diag("n_censored_at_switch", d.n_switchers());
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::super::testdata::*;
    use super::*;
    use crate::survival::{cox_fit, kaplan_meier};

    #[test]
    fn all_agree_without_switching() {
        let d = no_switch();
        let a = itt(&d).unwrap();
        for r in [exclude_switchers(&d).unwrap(), censor_at_switch(&d).unwrap()] {
            assert!((r.hr - a.hr).abs() < 1e-12);
            assert!((r.ci95.0 - a.ci95.0).abs() < 1e-12);
            assert!((r.ci95.1 - a.ci95.1).abs() < 1e-12);
        }
    }

    fn with_one_switcher() -> Dataset {
        let mut p = no_switch().into_patients();
        p[3].switch = Some(crate::data::SwitchAnnotation { time: 4.0, level: 1 });
        Dataset::new(p).unwrap()
    }

    #[test]
    fn itt_ignores_switching() {
        let d = with_one_switcher();
        assert_eq!(itt(&d).unwrap().hr, itt(&d.without_switching()).unwrap().hr);
    }

    #[test]
    fn exclusion_equals_kernel_on_subset() {
        let d = with_one_switcher();
        let subset: Vec<_> = d
            .patients()
            .iter()
            .filter(|p| p.switch.is_none())
            .map(|p| SurvSample::new(p.observed_time, p.event, p.arm.group()))
            .collect();
        assert_eq!(subset.len(), 11);
        let direct = cox_fit(&subset).unwrap();
        let r = exclude_switchers(&d).unwrap();
        assert_eq!(r.hr, direct.hr);
        assert_eq!(r.ci95, direct.ci95);
    }

    #[test]
    fn all_control_switch_is_degenerate() {
        let p: Vec<_> = no_switch()
            .into_patients()
            .into_iter()
            .map(|mut p| {
                if p.arm == Arm::Control {
                    p.switch = Some(crate::data::SwitchAnnotation {
                        time: p.observed_time / 2.0,
                        level: 1,
                    });
                }
                p
            })
            .collect();
        let d = Dataset::new(p).unwrap();
        assert!(matches!(exclude_switchers(&d), Err(Error::EmptyArmAfterExclusion)));
    }

    #[test]
    fn switcher_event_dropped_from_failures() {
        // patient c3 died at 9 after switching at 4: the KM of the recoded
        // data has one fewer step than the observed data
        let d = with_one_switcher();
        let obs: Vec<_> = d.patients().iter().map(observed).collect();
        let recoded: Vec<_> = d
            .patients()
            .iter()
            .map(|p| match p.switch {
                Some(sw) => SurvSample::new(sw.time, false, p.arm.group()),
                None => observed(p),
            })
            .collect();
        let before = kaplan_meier(&obs).unwrap().n_steps();
        let after = kaplan_meier(&recoded).unwrap().n_steps();
        assert_eq!(before - after, 1);
        assert!(recoded.iter().zip(&obs).all(|(r, o)| r.time <= o.time));
        censor_at_switch(&d).unwrap();
    }

    #[test]
    fn no_events_after_recoding() {
        let p = vec![
            patient("c", Arm::Control, 10.0, true, Some((5.0, 1))),
            patient("t", Arm::Treatment, 8.0, false, None),
        ];
        let d = Dataset::new(p).unwrap();
        assert!(matches!(censor_at_switch(&d), Err(Error::NoEventsAfterRecoding)));
    }
}
