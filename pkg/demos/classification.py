"""
Classifying pages by their nearest template
===========================================

Five page families, twenty perturbed screenshots each. Every repetition
draws one template per family at random, labels the remaining images by
the most correlated template and records the accuracy.
"""

from fdnshash import desk, evaluation, fdns

families = desk.template_families()
corpus = []
for k, (family, img) in enumerate(families.items()):
    for i, v in enumerate(desk.variants(img, 20, seed=k)):
        corpus.append((family, "%s/%02d" % (family, i), v))

result = evaluation.classification_eval(corpus, templates_per_class=1, repetitions=20, seed=0)
print("mean accuracy over %d repetitions: %.4f" % (result.repetitions, result.mean_accuracy))
print("worst repetition: %.4f" % min(result.accuracies))
print()
print(evaluation.confusion_table(result.confusion))

# a single query against a hand-built template database
db = evaluation.build_template_db(corpus, templates_per_class=1, seed=3)
query = fdns.hash_image(families["blog"])
label, score = evaluation.classify(query, db)
print("\nclean blog page -> %s (%.4f)" % (label, score))

# with a threshold, weak matches are rejected rather than forced
label, score = evaluation.classify(query, db, threshold=0.999)
print("with threshold 0.999 -> %s (%.4f)" % (label, score))
