#pragma once

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

// Modified Bessel functions K0 and K1 for positive real arguments, evaluated
// from the classic FNLIB Chebyshev fits: ascending series (with the
// -log(z/2)*I0 term) below z = 2, exponentially scaled fits on (2, 8] and
// (8, inf). A bare asymptotic expansion is ~0.6% off near z = 2, which is why
// the full coefficient tables are needed to hold 1e-10 relative accuracy.

namespace gumbelbox {
namespace detail {

// Clenshaw evaluation of an n-term Chebyshev series on [-1, 1].
inline double chebyshev_eval(double x, const double* cs, int n) {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  const double twox = 2.0 * x;
  for (int i = n - 1; i >= 0; --i) {
    b2 = b1;
    b1 = b0;
    b0 = twox * b1 - b2 + cs[i];
  }
  return 0.5 * (b0 - b2);
}

// Series coefficients below are the FNLIB fits; the *_terms counts keep just
// the terms that matter at double precision.

inline constexpr double bi0_series[18] = {
    -0.07660547252839144951081894976243285,
    1.927337953993808269952408750881196,
    0.2282644586920301338937029292330415,
    0.01304891466707290428079334210691888,
    4.344270900816487451378682681026107e-4,
    9.422657686001934663923171744118766e-6,
    1.434006289510691079962091878179957e-7,
    1.613849069661749069915419719994611e-9,
    1.396650044535669699495092708142522e-11,
    9.579451725505445344627523171893333e-14,
    5.333981859862502131015107744e-16,
    2.458716088437470774696785919999999e-18,
    9.535680890248770026944341333333333e-21,
    3.154382039721427336789333333333333e-23,
    9.004564101094637431466666666666666e-26,
    2.240647369123670016e-28,
    4.903034603242837333333333333333333e-31,
    9.508172606122666666666666666666666e-34};
inline constexpr int bi0_terms = 11;

inline constexpr double bi1_series[17] = {
    -0.0019717132610998597316138503218149,
    0.40734887667546480608155393652014,
    0.034838994299959455866245037783787,
    0.0015453945563001236038598401058489,
    4.188852109837778412945883200412e-5,
    7.6490267648362114741959703966069e-7,
    1.0042493924741178689179808037238e-8,
    9.9322077919238106481371298054863e-11,
    7.6638017918447637275200171681349e-13,
    4.741418923816739498038809194816e-15,
    2.4041144040745181799863172032e-17,
    1.0171505007093713649121100799999e-19,
    3.6450935657866949458491733333333e-22,
    1.1205749502562039344810666666666e-24,
    2.9875441934468088832e-27,
    6.9732310939194709333333333333333e-30,
    1.43679482206208e-32};
inline constexpr int bi1_terms = 11;

inline constexpr double bk0_series[16] = {
    -0.0353273932339027687201140060063153,
    0.344289899924628486886344927529213,
    0.0359799365153615016265721303687231,
    0.00126461541144692592338479508673447,
    2.28621210311945178608269830297585e-5,
    2.53479107902614945730790013428354e-7,
    1.90451637722020885897214059381366e-9,
    1.03496952576336245851008317853089e-11,
    4.25981614279108257652445327170133e-14,
    1.3744654358807508969423832544e-16,
    3.57089652850837359099688597333333e-19,
    7.63164366011643737667498666666666e-22,
    1.36542498844078185908053333333333e-24,
    2.07527526690666808319999999999999e-27,
    2.7128142180729856e-30,
    3.08259388791466666666666666666666e-33};
inline constexpr int bk0_terms = 11;

inline constexpr double ak0_series[38] = {
    -0.07643947903327941424082978270088,
    -0.02235652605699819052023095550791,
    7.734181154693858235300618174047e-4,
    -4.281006688886099464452146435416e-5,
    3.08170017386297474365001482666e-6,
    -2.639367222009664974067448892723e-7,
    2.563713036403469206294088265742e-8,
    -2.742705549900201263857211915244e-9,
    3.169429658097499592080832873403e-10,
    -3.902353286962184141601065717962e-11,
    5.068040698188575402050092127286e-12,
    -6.889574741007870679541713557984e-13,
    9.744978497825917691388201336831e-14,
    -1.427332841884548505389855340122e-14,
    2.156412571021463039558062976527e-15,
    -3.34965425514956277218878205853e-16,
    5.335260216952911692145280392601e-17,
    -8.693669980890753807639622378837e-18,
    1.446404347862212227887763442346e-18,
    -2.452889825500129682404678751573e-19,
    4.2337545262321715728217063424e-20,
    -7.427946526454464195695341294933e-21,
    1.3231505293926668662779674624e-21,
    -2.390587164739649451335981465599e-22,
    4.376827585923226140165712554666e-23,
    -8.113700607345118059339011413333e-24,
    1.521819913832172958310378154666e-24,
    -2.886041941483397770235958613333e-25,
    5.530620667054717979992610133333e-26,
    -1.070377329249898728591633066666e-26,
    2.091086893142384300296328533333e-27,
    -4.121713723646203827410261333333e-28,
    8.19348397112130764013568e-29,
    -1.642000275459297726780757333333e-29,
    3.316143281480227195890346666666e-30,
    -6.746863644145295941085866666666e-31,
    1.382429146318424677635413333333e-31,
    -2.851874167359832570811733333333e-32};
inline constexpr int ak0_terms = 18;

inline constexpr double ak02_series[33] = {
    -0.01201869826307592239839346212452,
    -0.009174852691025695310652561075713,
    1.444550931775005821048843878057e-4,
    -4.013614175435709728671021077879e-6,
    1.567831810852310672590348990333e-7,
    -7.77011043852173771031579975446e-9,
    4.611182576179717882533130529586e-10,
    -3.158592997860565770526665803309e-11,
    2.435018039365041127835887814329e-12,
    -2.074331387398347897709853373506e-13,
    1.925787280589917084742736504693e-14,
    -1.927554805838956103600347182218e-15,
    2.062198029197818278285237869644e-16,
    -2.341685117579242402603640195071e-17,
    2.805902810643042246815178828458e-18,
    -3.530507631161807945815482463573e-19,
    4.645295422935108267424216337066e-20,
    -6.368625941344266473922053461333e-21,
    9.0695213109865155676223488e-22,
    -1.337974785423690739845005311999e-22,
    2.03983602185995231552208896e-23,
    -3.207027481367840500060869973333e-24,
    5.189744413662309963626359466666e-25,
    -8.629501497540572192964607999999e-26,
    1.4721611831025598552080384e-26,
    -2.573069023867011283812351999999e-27,
    4.60177408664351658737664e-28,
    -8.411555324201093737130666666666e-29,
    1.569806306635368939301546666666e-29,
    -2.988226453005757788979199999999e-30,
    5.796831375216836520618666666666e-31,
    -1.145035994347681332155733333333e-31,
    2.301266594249682802005333333333e-32};
inline constexpr int ak02_terms = 14;

inline constexpr double bk1_series[16] = {
    0.025300227338947770532531120868533,
    -0.35315596077654487566723831691801,
    -0.12261118082265714823479067930042,
    -0.0069757238596398643501812920296083,
    -1.7302889575130520630176507368979e-4,
    -2.4334061415659682349600735030164e-6,
    -2.2133876307347258558315252545126e-8,
    -1.4114883926335277610958330212608e-10,
    -6.6669016941993290060853751264373e-13,
    -2.4274498505193659339263196864853e-15,
    -7.023863479386287597178379712e-18,
    -1.6543275155100994675491029333333e-20,
    -3.2338347459944491991893333333333e-23,
    -5.3312750529265274999466666666666e-26,
    -7.5130407162157226666666666666666e-29,
    -9.1550857176541866666666666666666e-32};
inline constexpr int bk1_terms = 11;

inline constexpr double ak1_series[38] = {
    0.27443134069738829695257666227266,
    0.07571989953199367817089237814929,
    -0.0014410515564754061229853116175625,
    6.6501169551257479394251385477036e-5,
    -4.3699847095201407660580845089167e-6,
    3.5402774997630526799417139008534e-7,
    -3.3111637792932920208982688245704e-8,
    3.4459775819010534532311499770992e-9,
    -3.8989323474754271048981937492758e-10,
    4.7208197504658356400947449339005e-11,
    -6.047835662875356234537359156289e-12,
    8.1284948748658747888193837985663e-13,
    -1.1386945747147891428923915951042e-13,
    1.654035840846228232597294820509e-14,
    -2.4809025677068848221516010440533e-15,
    3.8292378907024096948429227299157e-16,
    -6.0647341040012418187768210377386e-17,
    9.8324256232648616038194004650666e-18,
    -1.6284168738284380035666620115626e-18,
    2.7501536496752623718284120337066e-19,
    -4.7289666463953250924281069568e-20,
    8.2681500028109932722392050346666e-21,
    -1.4681405136624956337193964885333e-21,
    2.6447639269208245978085894826666e-22,
    -4.82901575648563878979698688e-23,
    8.9293020743610130180656332799999e-24,
    -1.6708397168972517176997751466666e-24,
    3.1616456034040694931368618666666e-25,
    -6.0462055312274989106506410666666e-26,
    1.1678798942042732700718421333333e-26,
    -2.277374158265399623286784e-27,
    4.4811097300773675795305813333333e-28,
    -8.8932884769020194062336e-29,
    1.7794680018850275131392e-29,
    -3.5884555967329095821994666666666e-30,
    7.2906290492694257991679999999999e-31,
    -1.4918449845546227073024e-31,
    3.0736573872934276300799999999999e-32};
inline constexpr int ak1_terms = 18;

inline constexpr double ak12_series[33] = {
    0.06379308343739001036600488534102,
    0.02832887813049720935835030284708,
    -2.475370673905250345414545566732e-4,
    5.771972451607248820470976625763e-6,
    -2.068939219536548302745533196552e-7,
    9.739983441381804180309213097887e-9,
    -5.585336140380624984688895511129e-10,
    3.732996634046185240221212854731e-11,
    -2.825051961023225445135065754928e-12,
    2.372019002484144173643496955486e-13,
    -2.176677387991753979268301667938e-14,
    2.157914161616032453939562689706e-15,
    -2.290196930718269275991551338154e-16,
    2.582885729823274961919939565226e-17,
    -3.07675264126846318762109817344e-18,
    3.851487721280491597094896844799e-19,
    -5.0447948976415289771172825088e-20,
    6.888673850418544237018292223999e-21,
    -9.77504154195011830300213248e-22,
    1.437416218523836461001659733333e-22,
    -2.185059497344347373499733333333e-23,
    3.4262456218092206316453888e-24,
    -5.531064394246408232501248e-25,
    9.176601505685995403782826666666e-26,
    -1.562287203618024911448746666666e-26,
    2.725419375484333132349439999999e-27,
    -4.865674910074827992378026666666e-28,
    8.879388552723502587357866666666e-29,
    -1.654585918039257548936533333333e-29,
    3.145111321357848674303999999999e-30,
    -6.092998312193127612416e-31,
    1.202021939369815834623999999999e-31,
    -2.412930801459408841386666666666e-32};
inline constexpr int ak12_terms = 14;

// I0 and I1 on [0, 3], the only range the K small-argument branches need.
inline double bessel_i0_small(double x) {
  assert(x >= 0.0 && x <= 3.0);
  const double xsml = std::sqrt(std::numeric_limits<double>::epsilon() * 4.5);
  if (x <= xsml) return 1.0;
  return 2.75 + chebyshev_eval(x * x / 4.5 - 1.0, bi0_series, bi0_terms);
}

inline double bessel_i1_small(double x) {
  assert(x >= 0.0 && x <= 3.0);
  const double xsml = std::sqrt(std::numeric_limits<double>::epsilon() * 4.5);
  if (x <= xsml) return 0.5 * x;
  return x * (chebyshev_eval(x * x / 4.5 - 1.0, bi1_series, bi1_terms) + 0.875);
}

// exp(z) * K(z) on (2, inf) where the scaled Chebyshev fits apply.
inline double bessel_k0_scaled_upper(double z) {
  assert(z > 2.0);
  if (z <= 8.0)
    return (chebyshev_eval((16.0 / z - 5.0) / 3.0, ak0_series, ak0_terms) + 1.25) / std::sqrt(z);
  return (chebyshev_eval(16.0 / z - 1.0, ak02_series, ak02_terms) + 1.25) / std::sqrt(z);
}

inline double bessel_k1_scaled_upper(double z) {
  assert(z > 2.0);
  if (z <= 8.0)
    return (chebyshev_eval((16.0 / z - 5.0) / 3.0, ak1_series, ak1_terms) + 1.25) / std::sqrt(z);
  return (chebyshev_eval(16.0 / z - 1.0, ak12_series, ak12_terms) + 1.25) / std::sqrt(z);
}

// Past this argument exp(-z)*K(z) underflows even the subnormal range.
inline constexpr double bessel_underflow_arg = 750.0;

} // namespace detail

// K0(z) to better than 1e-10 relative accuracy; underflows to exactly 0 for
// z beyond ~705 where the true value drops out of the normal double range.
inline double bessel_k0(double z) {
  if (!(z > 0.0)) throw std::domain_error("bessel_k0: argument must be > 0");
  if (z <= 2.0) {
    const double xsml = 2.0 * std::sqrt(std::numeric_limits<double>::epsilon());
    const double y = (z > xsml) ? z * z : 0.0;
    return -std::log(0.5 * z) * detail::bessel_i0_small(z) - 0.25 +
           detail::chebyshev_eval(0.5 * y - 1.0, detail::bk0_series, detail::bk0_terms);
  }
  if (z > detail::bessel_underflow_arg) return 0.0;
  return std::exp(-z) * detail::bessel_k0_scaled_upper(z);
}

// K1(z), same scheme as K0. Near zero K1 ~ 1/z; arguments so small that the
// result overflows are rejected.
inline double bessel_k1(double z) {
  if (!(z > 0.0)) throw std::domain_error("bessel_k1: argument must be > 0");
  if (z <= 2.0) {
    if (z < 1e-300) throw std::overflow_error("bessel_k1: result overflows for tiny argument");
    const double xsml = 2.0 * std::sqrt(std::numeric_limits<double>::epsilon());
    const double y = (z > xsml) ? z * z : 0.0;
    return std::log(0.5 * z) * detail::bessel_i1_small(z) +
           (0.75 + detail::chebyshev_eval(0.5 * y - 1.0, detail::bk1_series, detail::bk1_terms)) / z;
  }
  if (z > detail::bessel_underflow_arg) return 0.0;
  return std::exp(-z) * detail::bessel_k1_scaled_upper(z);
}

} // namespace gumbelbox
