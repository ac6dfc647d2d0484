#ifndef VSORT_C_API_H
#define VSORT_C_API_H

/* Flat C entry points for embedding the verification core (e.g. a WASM
   build). Strings returned through out-parameters are owned by the caller
   and released with vsort_free. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Returns 1 valid, 0 invalid, -1 if the JSON cannot be parsed as a
   transcript. *report_json (if non-null) receives
   {"valid":bool,"checks":[{"name","passed","reason"}],"elapsed_ms":number}
   or {"error":string} on -1. */
int vsort_verify_transcript(const char* transcript_json, int strict, char** report_json);

/* H_prime over "sample-%08u" with the discriminant congruence and 50 rounds.
   hint == 0 runs the full search; otherwise the hinted path at that index.
   Returns 0 on success, -1 on bad parameters or an invalid hint. */
int vsort_hprime_sample(uint32_t index, unsigned bits, uint64_t hint, uint64_t* iterations,
                        uint64_t* primality_tests);

void vsort_free(char* p);

#ifdef __cplusplus
}
#endif

#endif
