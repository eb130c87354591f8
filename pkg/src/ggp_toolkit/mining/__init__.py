"""Feature mining: phi selection and two-pool itemsets."""
