"""Synthetic reconstructions of the two tabular benchmark datasets.

The original recidivism-risk and credit-risk exports are not
redistributable here, so these generators produce stand-ins with the same
shape (row count, feature count, binary label), plausible marginal
distributions, and a label process calibrated so the shipped models land
in the published accuracy range. Feature selection and encodings are a
documented reconstruction, not the original data; every draw comes from
one seeded generator, so a given seed reproduces the dataset bit for bit.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, FeatureSchema, save_csv, save_schema

__all__ = [
    "COMPAS_SCHEMA",
    "GERMAN_SCHEMA",
    "synthetic_compas",
    "synthetic_german_credit",
    "write_dataset",
]

COMPAS_SCHEMA = FeatureSchema(
    names=(
        "age",
        "priors_count",
        "length_of_stay",
        "two_year_recid",
        "charge_degree_felony",
        "sex_male",
        "race_african_american",
    ),
    label_name="high_risk",
)

GERMAN_SCHEMA = FeatureSchema(
    names=(
        "checking_balance",
        "duration_months",
        "credit_history_score",
        "purpose_code",
        "credit_amount",
        "savings_balance",
        "employment_years",
        "installment_rate",
        "personal_status_code",
        "other_debtors_code",
        "residence_years",
        "property_code",
        "age",
        "other_installments_code",
        "housing_code",
        "existing_credits",
        "job_code",
        "dependents",
        "has_telephone",
        "foreign_worker",
    ),
    label_name="high_credit_risk",
)


def synthetic_compas(n: int = 4937, seed: int = 7) -> Dataset:
    """Recidivism-risk stand-in: 7 features, binary risk label.

    The latent risk score is linear in the standardized features (plus a
    priors-by-youth interaction) and leans on priors count and length of
    stay, the two features practitioners most often name as decisive.
    Those two are strongly right-skewed (a low-valued majority, a long
    positive tail), which concentrates large positive standardized values
    on the instances where they dominate. Label noise is tuned so a
    standardized logistic model or small ReLU network reaches test
    accuracy in the low/mid 0.8s on a 70/30 split.
    """
    rng = np.random.default_rng(seed)
    age = np.clip(np.round(18 + rng.gamma(2.0, 7.5, size=n)), 18, 80)
    has_priors = rng.random(n) < 0.38
    priors = np.where(has_priors, 1 + rng.negative_binomial(1.1, 0.22, size=n), 0.0)
    priors = np.clip(priors, 0, 38)
    felony = (rng.random(n) < 0.36).astype(float)
    sex = (rng.random(n) < 0.81).astype(float)
    race = (rng.random(n) < 0.46).astype(float)
    long_stay = rng.random(n) < 0.42
    length_of_stay = np.where(
        long_stay,
        np.round(np.expm1(rng.normal(3.4, 0.9, size=n))),
        np.round(rng.random(n) * 2),
    )
    length_of_stay = np.clip(length_of_stay, 0, 800)
    young = (age < 25).astype(float)
    recid_logit = -1.6 + 0.3 * np.minimum(priors, 10) + 0.7 * young
    two_year_recid = (rng.random(n) < 1.0 / (1.0 + np.exp(-recid_logit))).astype(float)

    X = np.column_stack([age, priors, length_of_stay, two_year_recid, felony, sex, race])
    Z = (X - X.mean(axis=0)) / X.std(axis=0)
    score = (
        -0.40 * Z[:, 0]
        + 1.45 * Z[:, 1]
        + 0.90 * Z[:, 2]
        + 0.50 * Z[:, 3]
        + 0.28 * Z[:, 4]
        + 0.10 * Z[:, 5]
        + 0.22 * Z[:, 6]
        + 0.35 * Z[:, 1] * young
    )
    score = score - np.median(score)
    temp = 2.1  # label-noise temperature; sets the Bayes accuracy ceiling
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-temp * score))).astype(int)
    return Dataset(COMPAS_SCHEMA, X, y)


def synthetic_german_credit(n: int = 1000, seed: int = 11) -> Dataset:
    """Credit-risk stand-in: 20 numerically encoded features.

    Noisier than the recidivism stand-in on purpose; the published models
    sit in the low 0.7s here.
    """
    rng = np.random.default_rng(seed)
    checking = rng.integers(0, 4, size=n).astype(float)
    duration = np.clip(np.round(rng.gamma(2.2, 9.5, size=n)), 4, 72)
    history = rng.integers(0, 5, size=n).astype(float)
    purpose = rng.integers(0, 10, size=n).astype(float)
    amount = np.clip(np.round(np.expm1(rng.normal(7.8, 0.75, size=n))), 250, 20000)
    savings = rng.integers(0, 5, size=n).astype(float)
    employment = rng.integers(0, 5, size=n).astype(float)
    installment = rng.integers(1, 5, size=n).astype(float)
    personal = rng.integers(0, 4, size=n).astype(float)
    debtors = rng.integers(0, 3, size=n).astype(float)
    residence = rng.integers(1, 5, size=n).astype(float)
    property_code = rng.integers(0, 4, size=n).astype(float)
    age = np.clip(np.round(19 + rng.gamma(2.0, 8.0, size=n)), 19, 75)
    other_inst = rng.integers(0, 3, size=n).astype(float)
    housing = rng.integers(0, 3, size=n).astype(float)
    existing = rng.integers(1, 5, size=n).astype(float)
    job = rng.integers(0, 4, size=n).astype(float)
    dependents = rng.integers(1, 3, size=n).astype(float)
    telephone = (rng.random(n) < 0.4).astype(float)
    foreign = (rng.random(n) < 0.96).astype(float)

    score = (
        -0.9 * (checking - 1.5) / 1.1
        + 0.55 * (duration - 21) / 12
        - 0.5 * (history - 2.0) / 1.4
        + 0.45 * (np.log(amount) - 7.9) / 0.75
        - 0.4 * (savings - 2.0) / 1.4
        - 0.3 * (employment - 2.0) / 1.4
        + 0.25 * (installment - 2.5) / 1.1
        - 0.3 * (age - 35) / 11
        + 0.2 * (existing - 2.5) / 1.1
        - 0.15 * (housing - 1.0)
        + 0.1 * (purpose - 4.5) / 2.9
        - 0.1 * telephone
        + 0.15 * foreign
    )
    score = score - np.median(score)
    temp = 1.6
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-temp * score))).astype(int)

    X = np.column_stack([
        checking, duration, history, purpose, amount, savings, employment,
        installment, personal, debtors, residence, property_code, age,
        other_inst, housing, existing, job, dependents, telephone, foreign,
    ])
    return Dataset(GERMAN_SCHEMA, X, y)


def write_dataset(ds: Dataset, csv_path, schema_path) -> None:
    """Write the CSV plus its schema JSON side by side."""
    save_csv(ds, csv_path)
    save_schema(ds.schema, schema_path)
