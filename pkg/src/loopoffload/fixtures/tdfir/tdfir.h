#ifndef TDFIR_H
#define TDFIR_H

#define NUM_FILTERS 4
#define FILTER_LEN 32
#define INPUT_LEN 512
#define OUTPUT_LEN 543
#define NUM_ITERS 4
#define TWO_PI 6.283185307179586

void init_inputs(void);
void init_filters(void);
void normalize_filters(void);
void compute_reference(void);
double compare_reference(void);

#endif
