#!/usr/bin/env python3
"""Writes a small census-style income table and its schema.

The columns mimic the Adult data set: a mix of numeric and categorical
attributes and a binary income label drawn from a noisy logistic score.

    python3 tools/make_adult_like.py tests/data
"""

import argparse
import csv
import math
import os
import random

WORKCLASS = ["Private", "Self-emp", "Federal-gov", "Local-gov", "State-gov"]
EDUCATION = [("HS-grad", 9), ("Some-college", 10), ("Assoc", 12), ("Bachelors", 13), ("Masters", 14),
             ("Doctorate", 16), ("11th", 7)]
MARITAL = ["Married", "Never-married", "Divorced", "Separated", "Widowed"]
OCCUPATION = ["Exec-managerial", "Prof-specialty", "Craft-repair", "Sales", "Adm-clerical",
              "Other-service", "Machine-op", "Tech-support"]
OCC_SHIFT = {"Exec-managerial": 0.9, "Prof-specialty": 0.8, "Tech-support": 0.4, "Sales": 0.2,
             "Craft-repair": 0.0, "Adm-clerical": -0.3, "Machine-op": -0.5, "Other-service": -1.0}

SCHEMA = """# Column types for adult_like.csv
id = ignore
age = numeric
workclass = categorical
education = categorical
education_num = numeric
marital_status = categorical
occupation = categorical
sex = categorical
hours_per_week = numeric
capital_gain = numeric
income = label
"""


def row(rng, i):
    age = min(90, max(17, int(rng.gauss(39, 13))))
    workclass = rng.choices(WORKCLASS, weights=[70, 11, 3, 7, 9])[0]
    education, edu_num = rng.choices(EDUCATION, weights=[32, 22, 8, 17, 6, 2, 13])[0]
    marital = rng.choices(MARITAL, weights=[46, 33, 14, 3, 4])[0]
    occupation = rng.choice(OCCUPATION)
    sex = rng.choices(["Male", "Female"], weights=[67, 33])[0]
    hours = min(99, max(1, int(rng.gauss(40, 12))))
    gain = int(rng.expovariate(1 / 8000)) if rng.random() < 0.08 else 0
    score = (-8.0 + 0.04 * age + 0.3 * edu_num + (1.4 if marital == "Married" else 0.0) +
             OCC_SHIFT[occupation] + 0.03 * hours + (0.3 if sex == "Male" else 0.0) +
             (1.5 if gain > 5000 else 0.0) + rng.gauss(0, 1.0))
    income = ">50K" if rng.random() < 1 / (1 + math.exp(-score)) else "<=50K"
    return [i, age, workclass, education, edu_num, marital, occupation, sex, hours, gain, income]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir")
    ap.add_argument("--rows", type=int, default=8000)
    ap.add_argument("--seed", type=int, default=1994)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "adult_like.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "age", "workclass", "education", "education_num", "marital_status", "occupation",
                    "sex", "hours_per_week", "capital_gain", "income"])
        for i in range(args.rows):
            w.writerow(row(rng, i))
    with open(os.path.join(args.out_dir, "adult_like.schema"), "w") as f:
        f.write(SCHEMA)


if __name__ == "__main__":
    main()
