#include <stdio.h>
#include <string.h>
#include "chempat.h"

static const char *TEXT = "Stir in DMF for 2 h.";

int main(int argc, char **argv) {
    char *canon = NULL;
    if (chempat_ann_canonicalize("T9\ttime 16 19\t2 h\nT2\tsolvent 8 11\tDMF\n", TEXT, &canon) != CHEMPAT_STATUS_OK) {
        return 1;
    }
    if (strcmp(canon, "T1\tsolvent 8 11\tDMF\nT2\ttime 16 19\t2 h\n") != 0) {
        return 2;
    }
    chempat_string_free(canon);

    if (chempat_ann_canonicalize("T1\ttime 16 40\tx\n", TEXT, &canon) != CHEMPAT_STATUS_PARSE) {
        return 3;
    }
    char *err = chempat_last_error();
    if (err == NULL || strstr(err, "line 1") == NULL) {
        return 4;
    }
    chempat_string_free(err);

    if (argc > 1) {
        ChempatCorpus *gold = NULL;
        ChempatMetrics m;
        if (chempat_corpus_load(argv[1], &gold) != CHEMPAT_STATUS_OK) {
            return 5;
        }
        if (chempat_evaluate(gold, gold, CHEMPAT_MATCH_MODE_RELAXED, &m) != CHEMPAT_STATUS_OK || m.f1 != 1.0) {
            return 6;
        }
        printf("%zu %llu\n", chempat_corpus_len(gold), (unsigned long long)m.tp);
        chempat_corpus_free(gold);
    }
    printf("chempat %s\n", chempat_version());
    return 0;
}
