//! Synthetic control/patient cohorts.
//!
//! Each gene gets one list of polymorphic positions (one per 100-base window
//! by default) and a disjoint list of pathogenic positions (one per 200-base
//! window). Every listed site carries a single alternate base. Polymorphic
//! sites are substituted in the same fraction of both groups; pathogenic
//! sites in a larger fraction of patients than controls. Carrier counts are
//! exact, `round(f * n)`, not Bernoulli draws.

mod store;

pub use store::{load_cohort_dir, write_cohort_dir, CohortManifest, GeneEntry, ManifestSample};

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::rng_from;
use crate::seq::{GeneSequence, Label, NetworkSample, Nucleotide, SeqError};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("window [{start}, {end}] cannot hold a pathogenic position disjoint from the polymorphic list")]
    WindowExhausted { start: usize, end: usize },
    #[error("intervals must be at least 1")]
    ZeroInterval,
    #[error("reference length must be at least 1")]
    EmptyReference,
    #[error("frequency {name} = {value} is outside [0, 1]")]
    BadFrequency { name: &'static str, value: f64 },
    #[error("cohort has no genes")]
    NoGenes,
    #[error("cohort has no samples")]
    EmptyCohort,
    #[error("duplicate gene id '{0}'")]
    DuplicateGene(String),
    #[error("cohort store: {0}")]
    Store(String),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sorted, disjoint 1-based variant positions for one gene.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PositionLists {
    pub polymorphic: Vec<usize>,
    pub pathogenic: Vec<usize>,
}

/// Draws one polymorphic position per complete `poly_interval` window and one
/// pathogenic position per complete `patho_interval` window. Windows are
/// `[k*w + 1, (k+1)*w]`; a trailing partial window yields nothing. Pathogenic
/// draws that land on a polymorphic position are redrawn in the same window.
pub fn sample_position_lists<R: Rng + ?Sized>(
    gene_length: usize,
    poly_interval: usize,
    patho_interval: usize,
    rng: &mut R,
) -> Result<PositionLists, DatagenError> {
    if poly_interval == 0 || patho_interval == 0 {
        return Err(DatagenError::ZeroInterval);
    }
    let polymorphic: Vec<usize> = (0..gene_length / poly_interval)
        .map(|k| rng.gen_range(k * poly_interval + 1..=(k + 1) * poly_interval))
        .collect();

    let pathogenic = sample_pathogenic_positions(gene_length, patho_interval, &polymorphic, rng)?;
    Ok(PositionLists {
        polymorphic,
        pathogenic,
    })
}

/// One position per complete `patho_interval` window, avoiding the sorted
/// `polymorphic` positions.
pub fn sample_pathogenic_positions<R: Rng + ?Sized>(
    gene_length: usize,
    patho_interval: usize,
    polymorphic: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>, DatagenError> {
    if patho_interval == 0 {
        return Err(DatagenError::ZeroInterval);
    }
    let mut pathogenic = Vec::with_capacity(gene_length / patho_interval);
    for k in 0..gene_length / patho_interval {
        let (start, end) = (k * patho_interval + 1, (k + 1) * patho_interval);
        let lo = polymorphic.partition_point(|&p| p < start);
        let hi = polymorphic.partition_point(|&p| p <= end);
        if hi - lo >= patho_interval {
            return Err(DatagenError::WindowExhausted { start, end });
        }
        let taken = &polymorphic[lo..hi];
        loop {
            let p = rng.gen_range(start..=end);
            if taken.binary_search(&p).is_err() {
                pathogenic.push(p);
                break;
            }
        }
    }
    Ok(pathogenic)
}

/// I.i.d. uniform reference sequence.
pub fn generate_reference<R: Rng + ?Sized>(
    id: &str,
    length: usize,
    rng: &mut R,
) -> Result<GeneSequence, DatagenError> {
    if length == 0 {
        return Err(DatagenError::EmptyReference);
    }
    let bases = (0..length)
        .map(|_| Nucleotide::ALL[rng.gen_range(0..4)])
        .collect();
    Ok(GeneSequence::new(id, bases))
}

/// `count` references named `gene001`, `gene002`, ... with lengths uniform in
/// `[min_length, max_length]`. Gene `g` uses its own sub-seed.
pub fn generate_references(
    count: usize,
    min_length: usize,
    max_length: usize,
    seed: u64,
) -> Result<Vec<GeneSequence>, DatagenError> {
    (0..count)
        .into_par_iter()
        .map(|g| {
            let mut rng = rng_from(seed, &[0x5EF, g as u64]);
            let len = rng.gen_range(min_length.min(max_length)..=max_length.max(min_length));
            generate_reference(&format!("gene{:03}", g + 1), len, &mut rng)
        })
        .collect()
}

/// Exactly `round(frequency * n_samples)` distinct indices, sampled without
/// replacement and returned sorted.
pub fn assign_carriers<R: Rng + ?Sized>(
    n_samples: usize,
    frequency: f64,
    rng: &mut R,
) -> Vec<usize> {
    let k = carrier_count(n_samples, frequency);
    let mut chosen = index::sample(rng, n_samples, k).into_vec();
    chosen.sort_unstable();
    chosen
}

pub fn carrier_count(n_samples: usize, frequency: f64) -> usize {
    ((frequency * n_samples as f64).round() as usize).min(n_samples)
}

/// Whether controls and patients share the pathogenic positions list.
///
/// With `PerGroup`, each group gets its own pathogenic list (both disjoint
/// from the shared polymorphic list), and a pathogenic site is carried only
/// within its group: by `maf_pathogenic_control` of controls or
/// `maf_pathogenic_patient` of patients. With `Shared`, every pathogenic site
/// is carried at both frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathogenicLists {
    Shared,
    #[default]
    PerGroup,
}

/// Generative description of a cohort.
#[derive(Debug, Clone)]
pub struct CohortSpec {
    pub genes: Vec<GeneSequence>,
    pub n_control: usize,
    pub n_patient: usize,
    pub maf_polymorphic: f64,
    pub maf_pathogenic_control: f64,
    pub maf_pathogenic_patient: f64,
    pub poly_interval: usize,
    pub patho_interval: usize,
    pub pathogenic_lists: PathogenicLists,
    pub seed: u64,
}

impl CohortSpec {
    /// Default protocol: 0.40 / 0.25 / 0.30 frequencies, 100- and 200-base windows.
    pub fn new(genes: Vec<GeneSequence>, n_control: usize, n_patient: usize, seed: u64) -> Self {
        CohortSpec {
            genes,
            n_control,
            n_patient,
            maf_polymorphic: 0.40,
            maf_pathogenic_control: 0.25,
            maf_pathogenic_patient: 0.30,
            poly_interval: 100,
            patho_interval: 200,
            pathogenic_lists: PathogenicLists::default(),
            seed,
        }
    }

    pub fn params(&self) -> CohortParams {
        CohortParams {
            n_control: self.n_control,
            n_patient: self.n_patient,
            maf_polymorphic: self.maf_polymorphic,
            maf_pathogenic_control: self.maf_pathogenic_control,
            maf_pathogenic_patient: self.maf_pathogenic_patient,
            poly_interval: self.poly_interval,
            patho_interval: self.patho_interval,
            pathogenic_lists: self.pathogenic_lists,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        self.params().validate()?;
        if self.genes.is_empty() {
            return Err(DatagenError::NoGenes);
        }
        let mut ids: Vec<&str> = self.genes.iter().map(|g| g.id()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(DatagenError::DuplicateGene(w[0].to_string()));
        }
        Ok(())
    }
}

/// Every scalar of a [`CohortSpec`]; what a manifest echoes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortParams {
    pub n_control: usize,
    pub n_patient: usize,
    pub maf_polymorphic: f64,
    pub maf_pathogenic_control: f64,
    pub maf_pathogenic_patient: f64,
    pub poly_interval: usize,
    pub patho_interval: usize,
    #[serde(default)]
    pub pathogenic_lists: PathogenicLists,
    pub seed: u64,
}

impl CohortParams {
    pub fn validate(&self) -> Result<(), DatagenError> {
        for (name, value) in [
            ("maf_polymorphic", self.maf_polymorphic),
            ("maf_pathogenic_control", self.maf_pathogenic_control),
            ("maf_pathogenic_patient", self.maf_pathogenic_patient),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(DatagenError::BadFrequency { name, value });
            }
        }
        if self.poly_interval == 0 || self.patho_interval == 0 {
            return Err(DatagenError::ZeroInterval);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteKind {
    Polymorphic,
    Pathogenic,
}

/// A listed position, its alternate base and the samples carrying it.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantSite {
    /// 1-based.
    pub position: usize,
    pub kind: SiteKind,
    pub alt: Nucleotide,
    /// The only group carrying this site, if it is group-specific.
    pub group: Option<Label>,
    /// Sorted cohort sample indices.
    pub carriers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneVariants {
    pub reference: GeneSequence,
    /// With per-group pathogenic lists, `pathogenic` is the controls' list.
    pub positions: PositionLists,
    /// The patients' pathogenic list, when lists are per group.
    pub patient_pathogenic: Option<Vec<usize>>,
    /// Sorted by position.
    pub sites: Vec<VariantSite>,
}

impl GeneVariants {
    /// Listed positions with kind and carrying group, sorted by position.
    pub fn listed(&self) -> Vec<(usize, SiteKind, Option<Label>)> {
        let control_only = self.patient_pathogenic.is_some().then_some(Label::Control);
        let mut listed: Vec<_> = self
            .positions
            .polymorphic
            .iter()
            .map(|&p| (p, SiteKind::Polymorphic, None))
            .chain(
                self.positions
                    .pathogenic
                    .iter()
                    .map(|&p| (p, SiteKind::Pathogenic, control_only)),
            )
            .chain(
                self.patient_pathogenic
                    .iter()
                    .flatten()
                    .map(|&p| (p, SiteKind::Pathogenic, Some(Label::Patient))),
            )
            .collect();
        listed.sort_by_key(|&(p, _, g)| (p, g.map(|l| l == Label::Patient)));
        listed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleInfo {
    pub id: String,
    pub label: Label,
}

/// A realized cohort, stored as references plus per-site carrier sets.
/// Samples are materialized on demand with [`Cohort::sample`].
#[derive(Debug, Clone)]
pub struct Cohort {
    pub params: CohortParams,
    pub samples: Vec<SampleInfo>,
    pub genes: Vec<GeneVariants>,
}

impl Cohort {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn position_lists(&self) -> impl Iterator<Item = &PositionLists> {
        self.genes.iter().map(|g| &g.positions)
    }

    pub fn group_size(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    /// The haploid network of sample `index`.
    pub fn sample(&self, index: usize) -> NetworkSample {
        let info = &self.samples[index];
        let idx = index as u32;
        let genes = self
            .genes
            .iter()
            .map(|gene| {
                let mut seq = gene.reference.clone();
                let bases = seq.bases_mut();
                for site in &gene.sites {
                    if site.carriers.binary_search(&idx).is_ok() {
                        bases[site.position - 1] = site.alt;
                    }
                }
                seq
            })
            .collect();
        NetworkSample {
            sample_id: info.id.clone(),
            label: info.label,
            genes,
        }
    }

    pub fn iter_samples(&self) -> impl Iterator<Item = NetworkSample> + '_ {
        (0..self.len()).map(move |i| self.sample(i))
    }
}

fn sample_infos(n_control: usize, n_patient: usize) -> Vec<SampleInfo> {
    let controls = (0..n_control).map(|i| SampleInfo {
        id: format!("control{:04}", i + 1),
        label: Label::Control,
    });
    let patients = (0..n_patient).map(|i| SampleInfo {
        id: format!("patient{:04}", i + 1),
        label: Label::Patient,
    });
    controls.chain(patients).collect()
}

/// Realizes a cohort. Controls occupy sample indices `0..n_control`, patients
/// follow. Gene `g` draws from its own sub-seed, so the result does not
/// depend on scheduling.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Cohort, DatagenError> {
    spec.validate()?;
    let n_control = spec.n_control;
    let genes = spec
        .genes
        .par_iter()
        .enumerate()
        .map(|(g, reference)| {
            let mut rng = rng_from(spec.seed, &[0xC0407, g as u64]);
            let positions = sample_position_lists(
                reference.len(),
                spec.poly_interval,
                spec.patho_interval,
                &mut rng,
            )?;
            let patient_pathogenic = match spec.pathogenic_lists {
                PathogenicLists::Shared => None,
                PathogenicLists::PerGroup => Some(sample_pathogenic_positions(
                    reference.len(),
                    spec.patho_interval,
                    &positions.polymorphic,
                    &mut rng,
                )?),
            };
            let mut gene = GeneVariants {
                reference: reference.clone(),
                positions,
                patient_pathogenic,
                sites: Vec::new(),
            };
            gene.sites = gene
                .listed()
                .into_iter()
                .map(|(position, kind, group)| {
                    let reference_base = reference.bases()[position - 1];
                    let alts: Vec<Nucleotide> = Nucleotide::ALL
                        .into_iter()
                        .filter(|&b| b != reference_base)
                        .collect();
                    let alt = alts[rng.gen_range(0..3)];
                    let (f_control, f_patient) = match kind {
                        SiteKind::Polymorphic => (spec.maf_polymorphic, spec.maf_polymorphic),
                        SiteKind::Pathogenic => {
                            (spec.maf_pathogenic_control, spec.maf_pathogenic_patient)
                        }
                    };
                    let mut carriers: Vec<u32> = Vec::new();
                    if group != Some(Label::Patient) {
                        carriers.extend(
                            assign_carriers(n_control, f_control, &mut rng)
                                .into_iter()
                                .map(|i| i as u32),
                        );
                    }
                    if group != Some(Label::Control) {
                        carriers.extend(
                            assign_carriers(spec.n_patient, f_patient, &mut rng)
                                .into_iter()
                                .map(|i| (i + n_control) as u32),
                        );
                    }
                    VariantSite {
                        position,
                        kind,
                        alt,
                        group,
                        carriers,
                    }
                })
                .collect();
            Ok(gene)
        })
        .collect::<Result<Vec<_>, DatagenError>>()?;

    Ok(Cohort {
        params: spec.params(),
        samples: sample_infos(spec.n_control, spec.n_patient),
        genes,
    })
}

/// Realized carrier fractions at one listed site.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteAudit {
    pub gene: String,
    pub position: usize,
    pub kind: SiteKind,
    pub group: Option<Label>,
    pub control_fraction: f64,
    pub patient_fraction: f64,
    pub control_carriers: usize,
    pub patient_carriers: usize,
    /// Carrier counts differ from `round(f * n)` for this site's frequencies
    /// (zero outside the carrying group of a group-specific site).
    pub deviates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub sites: Vec<SiteAudit>,
    pub deviations: usize,
}

impl AuditReport {
    pub fn is_exact(&self) -> bool {
        self.deviations == 0
    }
}

/// Per-site carrier fractions in each group, flagged against the exact
/// counts implied by the cohort's frequencies.
pub fn cohort_audit(cohort: &Cohort) -> Result<AuditReport, DatagenError> {
    if cohort.is_empty() {
        return Err(DatagenError::EmptyCohort);
    }
    let n_control = cohort.group_size(Label::Control);
    let n_patient = cohort.group_size(Label::Patient);
    let frac = |count: usize, n: usize| if n == 0 { 0.0 } else { count as f64 / n as f64 };
    let p = &cohort.params;

    let mut sites = Vec::new();
    for gene in &cohort.genes {
        for site in &gene.sites {
            let (mut c, mut t) = (0, 0);
            for &i in &site.carriers {
                match cohort.samples[i as usize].label {
                    Label::Control => c += 1,
                    Label::Patient => t += 1,
                }
            }
            let (mut fc, mut fp) = match site.kind {
                SiteKind::Polymorphic => (p.maf_polymorphic, p.maf_polymorphic),
                SiteKind::Pathogenic => (p.maf_pathogenic_control, p.maf_pathogenic_patient),
            };
            match site.group {
                Some(Label::Control) => fp = 0.0,
                Some(Label::Patient) => fc = 0.0,
                None => {}
            }
            let deviates = c != carrier_count(n_control, fc) || t != carrier_count(n_patient, fp);
            sites.push(SiteAudit {
                gene: gene.reference.id().to_string(),
                position: site.position,
                kind: site.kind,
                group: site.group,
                control_fraction: frac(c, n_control),
                patient_fraction: frac(t, n_patient),
                control_carriers: c,
                patient_carriers: t,
                deviates,
            });
        }
    }
    let deviations = sites.iter().filter(|s| s.deviates).count();
    Ok(AuditReport { sites, deviations })
}
