#include <math.h>
#include <stdio.h>
#include "cf_limits_lab.h"

#define CHECK(c) do { if (!(c)) { fprintf(stderr, "check failed: %s (line %d)\n", #c, __LINE__); return 1; } } while (0)

int main(void) {
    double p = 0.0;
    CHECK(cf_gauss_cdf(1.0, &p) == CF_STATUS_OK && fabs(p - 1.0) < 1e-15);
    CHECK(cf_gauss_cdf(-0.5, &p) == CF_STATUS_DOMAIN);
    char msg[128];
    CHECK(cf_last_error_message(msg, sizeof msg) > 0);

    uint64_t digits[8];
    size_t len = 0;
    CHECK(cf_digits_of_rational(113, 355, digits, 8, &len) == CF_STATUS_OK);
    CHECK(len == 3 && digits[0] == 3 && digits[1] == 7 && digits[2] == 16);

    CfConstants c;
    CHECK(cf_constants(&c) == CF_STATUS_OK && c.eta < 0.0861 && c.rho > 0.68344);

    CfSampler *s = NULL;
    CHECK(cf_sampler_new("mixture", 1, 0, 5, &s) == CF_STATUS_OK);
    uint64_t d;
    int n = 0;
    while (cf_sampler_next(s, &d) == CF_STATUS_OK) {
        CHECK(d >= 1);
        n++;
    }
    CHECK(n == 5);
    cf_sampler_free(s);

    CfEventFamily *f = NULL;
    CHECK(cf_family_preset("sqrt-nlogn-equal", &f) == CF_STATUS_OK);
    CfVerdict v;
    CHECK(cf_series_verdict(f, CF_VARIANT_ZERO_ONE, 100000, CF_METHOD_INTEGRAL_TEST, &v) == CF_STATUS_OK);
    CHECK(v.kind == CF_VERDICT_KIND_INFINITELY_OFTEN);
    bool hit = false;
    CHECK(cf_family_contains(f, 10, 4, &hit) == CF_STATUS_OK && hit);
    cf_family_free(f);

    CHECK(cf_family_from_json("{\"kind\":\"wedge\"}", &f) != CF_STATUS_OK && f == NULL);
    puts("c smoke ok");
    return 0;
}
